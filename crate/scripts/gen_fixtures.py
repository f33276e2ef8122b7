#!/usr/bin/env python3
"""Generate the synthetic recorded-payload corpus and auxiliary data files.

Writes, under fixtures/:
  recorded/<wiki>/<NNN-name>/{request.json,response.status,response.body}
  curated.json
  providers/*.json
  democracy_index.json

The numbers are invented but shaped like the real upstream payloads. Country
shares follow an exponential decay over a per-wiki country ordering, with the
decay rate solved so that the (bucketed) distribution lands near a target
entropy. Re-running the script reproduces the same bytes.

After regenerating, refresh the snapshot goldens with
  UPDATE_GOLDENS=1 cargo test -p observatory-core --test replay_goldens
"""

import json
import math
import random
import shutil
import statistics
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent / "fixtures"
MONTH = (2021, 4)
ACTION = "https://{host}/w/api.php"
REST = "https://wikimedia.org/api/rest_v1"
ELEVATED = ["sysop", "bureaucrat", "checkuser", "oversight", "rollbacker"]

COUNTRIES = [
    "US", "GB", "IN", "CA", "AU", "DE", "FR", "ES", "MX", "AR", "CO", "CL", "PE", "VE", "EG", "SA",
    "DZ", "MA", "IQ", "AE", "JP", "PH", "SE", "NL", "BE", "RU", "UA", "BY", "KZ", "IT", "CH", "AT",
    "PL", "VN", "CN", "TW", "HK", "SG", "BR", "PT", "IR", "AF", "RS", "BA", "ID", "MY", "KR", "NO",
    "FI", "DK", "TR", "NG", "ZA", "KE", "PK", "BD", "IL", "GR", "CZ", "RO",
]

# code: articles, pages/article, edits/article, users, active, elevated,
#       elevated active, filters (on, off), blocks, monthly views,
#       editors 5..99, editors 100.., target edit entropy, target view
#       entropy, leading countries
WIKIS = {
    "en":  (6_310_000, 8.5, 160, 42_000_000, 125_000, 1_200, 640, (168, 61), 1_450, 7.6e9, 31_000, 3_600, 2.70, 2.55, ["US", "GB", "IN", "CA", "AU", "PH", "DE", "NG", "PK", "ZA"]),
    "ceb": (6_090_000, 1.8, 5, 105_000, 160, 14, 5, (9, 2), 40, 9.0e5, 70, 12, 2.35, 0.85, ["PH", "SE", "US", "JP", "DE", "GB", "AU", "CA", "FR", "NL"]),
    "sv":  (3_200_000, 2.4, 15, 800_000, 2_300, 160, 70, (95, 40), 300, 9.5e7, 1_800, 260, 1.95, 1.30, ["SE", "FI", "US", "NO", "DE", "GB", "DK", "NL", "ES", "FR"]),
    "de":  (2_590_000, 3.0, 80, 3_700_000, 19_000, 620, 380, (140, 90), 900, 8.8e8, 15_000, 2_000, 1.15, 1.05, ["DE", "AT", "CH", "US", "NL", "GB", "IT", "FR", "PL", "ES"]),
    "fr":  (2_310_000, 4.5, 80, 4_200_000, 18_000, 460, 250, (120, 60), 800, 6.9e8, 14_000, 1_700, 1.60, 1.50, ["FR", "BE", "CA", "CH", "MA", "DZ", "US", "DE", "GB", "ES"]),
    "nl":  (2_060_000, 2.2, 28, 1_100_000, 4_000, 120, 60, (60, 30), 260, 1.3e8, 3_200, 420, 0.95, 0.90, ["NL", "BE", "US", "DE", "GB", "FR", "ES", "CH", "IT", "SE"]),
    "ru":  (1_720_000, 4.2, 75, 3_000_000, 11_000, 420, 230, (110, 70), 700, 7.8e8, 9_000, 1_100, 1.50, 1.65, ["RU", "UA", "BY", "KZ", "US", "DE", "IL", "FI", "GB", "UZ"]),
    "it":  (1_700_000, 4.0, 65, 2_100_000, 9_500, 240, 120, (80, 50), 500, 3.7e8, 7_800, 1_000, 0.80, 0.70, ["IT", "CH", "US", "DE", "GB", "FR", "ES", "AT", "BR", "AR"]),
    "es":  (1_690_000, 4.2, 75, 6_500_000, 16_000, 210, 100, (150, 40), 850, 1.1e9, 13_000, 1_300, 2.25, 2.30, ["ES", "MX", "AR", "CO", "CL", "PE", "VE", "US", "EC", "GT"]),
    "pl":  (1_500_000, 2.3, 40, 1_000_000, 4_300, 160, 90, (70, 30), 320, 2.0e8, 3_600, 450, 0.60, 0.50, ["PL", "GB", "DE", "US", "IE", "NL", "NO", "FR", "ES", "IT"]),
    "war": (1_266_000, 1.2, 6, 45_000, 60, 8, 3, (5, 1), 25, 3.0e5, 24, 6, 2.05, 0.75, ["PH", "SE", "US", "JP", "GB", "DE", "AU", "CA", "SA", "AE"]),
    "vi":  (1_270_000, 2.5, 20, 800_000, 1_900, 60, 25, (45, 12), 220, 1.6e8, 1_500, 170, 0.90, 0.80, ["VN", "US", "JP", "KR", "AU", "DE", "FR", "CA", "TW", "GB"]),
    "ja":  (1_250_000, 3.1, 70, 1_900_000, 14_000, 130, 70, (90, 60), 600, 1.2e9, 11_500, 1_500, 0.45, 0.20, ["JP", "US", "KR", "TW", "CN", "GB", "DE", "AU", "CA", "TH"]),
    "zh":  (1_190_000, 5.2, 55, 3_100_000, 8_200, 110, 55, (100, 40), 650, 3.0e8, 6_800, 800, 1.75, 1.40, ["TW", "HK", "CN", "US", "MY", "SG", "JP", "CA", "AU", "MO"]),
    "arz": (1_150_000, 1.6, 4, 150_000, 200, 6, 2, (10, 3), 30, 1.9e7, 150, 25, 0.80, 1.85, ["EG", "SA", "US", "AE", "KW", "DE", "GB", "QA", "JO", "LY"]),
    "ar":  (1_100_000, 6.0, 45, 2_100_000, 5_600, 120, 50, (85, 35), 420, 2.0e8, 4_600, 540, 2.40, 2.20, ["EG", "SA", "DZ", "MA", "IQ", "AE", "JO", "SY", "KW", "US"]),
    "uk":  (1_100_000, 3.0, 30, 550_000, 3_800, 90, 45, (60, 25), 240, 1.1e8, 3_100, 380, 0.90, 1.15, ["UA", "RU", "PL", "DE", "US", "CZ", "GB", "IT", "CA", "ES"]),
    "pt":  (1_060_000, 4.9, 45, 2_700_000, 6_200, 110, 50, (75, 45), 380, 3.4e8, 5_200, 620, 1.30, 1.20, ["BR", "PT", "US", "AO", "MZ", "FR", "DE", "GB", "ES", "JP"]),
    "fa":  (810_000, 5.4, 25, 1_000_000, 4_900, 55, 25, (110, 30), 260, 2.5e8, 4_100, 500, 1.10, 1.00, ["IR", "US", "DE", "AF", "CA", "GB", "TR", "SE", "NL", "AE"]),
    "ca":  (690_000, 2.5, 45, 400_000, 1_700, 45, 20, (55, 15), 150, 2.5e7, 1_400, 210, 1.20, 1.10, ["ES", "AD", "FR", "US", "DE", "GB", "IT", "NL", "CH", "MX"]),
    "sr":  (655_000, 5.9, 25, 300_000, 700, 40, 15, (45, 10), 120, 2.8e7, 560, 90, 1.30, 1.25, ["RS", "BA", "ME", "DE", "US", "AT", "HR", "CH", "RU", "GB"]),
    "id":  (595_000, 4.5, 35, 2_000_000, 3_600, 70, 30, (60, 20), 300, 2.1e8, 3_000, 330, 0.75, 0.60, ["ID", "MY", "US", "SG", "JP", "AU", "NL", "DE", "SA", "GB"]),
    "ko":  (560_000, 4.0, 50, 700_000, 3_100, 60, 25, (65, 20), 210, 9.0e7, 2_600, 330, 0.60, 0.50, ["KR", "US", "JP", "CA", "AU", "DE", "CN", "VN", "GB", "SG"]),
    "no":  (560_000, 2.2, 30, 450_000, 1_100, 70, 30, (40, 20), 110, 2.8e7, 880, 140, 0.85, 0.80, ["NO", "US", "SE", "GB", "DE", "ES", "DK", "FR", "NL", "PL"]),
    "fi":  (505_000, 2.5, 35, 430_000, 1_500, 60, 25, (40, 15), 120, 5.5e7, 1_200, 180, 0.70, 0.60, ["FI", "SE", "US", "DE", "EE", "GB", "ES", "NO", "FR", "NL"]),
    # below the scatter threshold
    "eo":  (305_000, 3.0, 30, 150_000, 700, 30, 12, (30, 5), 60, 3.0e6, 560, 80, 2.30, 2.40, ["BR", "US", "FR", "DE", "PL", "ES", "RU", "HU", "CN", "JP"]),
    "gl":  (180_000, 3.0, 40, 130_000, 600, 25, 10, (25, 5), 40, 5.5e6, 480, 70, 0.70, 0.90, ["ES", "AR", "US", "PT", "BR", "FR", "DE", "GB", "MX", "CH"]),
    "is":  (55_000, 2.5, 30, 45_000, 160, 12, 4, (12, 3), 15, 2.2e6, 0, 0, 0.40, 0.35, ["IS", "US", "DK", "GB", "NO", "SE", "DE", "ES", "PL", "CA"]),
}

# curated: patrolling tools, stewards with the language, steward requests,
# deletion requests, stub category
CURATED = {
    "en": (14, 12, 40, 5200, "All stub articles"),
    "ceb": (2, 1, 9, 30, "Mga turok"),
    "sv": (6, 3, 6, 900, "Stubbar"),
    "de": (11, 6, 8, 3100, None),
    "fr": (9, 6, 7, 2800, "Wikipédia:ébauche"),
    "nl": (6, 2, 5, 1600, "Wikipedia:Beginnetje"),
    "ru": (9, 5, 12, 3400, "Незавершённые статьи"),
    "it": (7, 4, 6, 2100, "Stub"),
    "es": (8, 6, 14, 4100, "Wikipedia:Esbozo"),
    "pl": (5, 3, 5, 1400, None),
    "war": (1, 1, 11, 20, None),
    "vi": (4, 2, 9, 800, "Sơ khai"),
    "ja": (6, 2, 10, 1900, "スタブ"),
    "zh": (7, 3, 11, 1700, "小作品"),
    "arz": (2, 1, 13, 150, None),
    "ar": (6, 4, 16, 1300, "بذرة"),
    "uk": (5, 3, 7, 900, "Незавершені статті"),
    "pt": (6, 4, 10, 2000, "!Esboços"),
    "fa": (5, 2, 9, 1100, "مقاله‌های خرد"),
    "ca": (4, 2, 4, 500, "Esborranys"),
    "sr": (3, 2, 6, 400, None),
    "id": (4, 2, 8, 1200, "Rintisan"),
    "ko": (4, 2, 6, 700, "토막글"),
    "no": (3, 3, 4, 450, "Stubber"),
    "fi": (4, 3, 4, 480, "Tynkä"),
    "eo": (2, 2, 3, 90, "Ĝermoj"),
    "gl": (2, 1, 3, 60, "Bosquexos"),
}
STUB_SHARE = {"ceb": 0.92, "war": 0.90, "sv": 0.55, "vi": 0.48, "arz": 0.70}

DEMOCRACY = {
    "US": 0.74, "GB": 0.81, "IN": 0.45, "CA": 0.86, "AU": 0.84, "DE": 0.87, "FR": 0.82, "ES": 0.80,
    "MX": 0.45, "AR": 0.68, "CO": 0.52, "CL": 0.80, "PE": 0.62, "VE": 0.08, "EG": 0.10, "SA": 0.02,
    "DZ": 0.17, "MA": 0.24, "IQ": 0.22, "AE": 0.08, "JP": 0.78, "PH": 0.35, "SE": 0.90, "NL": 0.85,
    "BE": 0.83, "RU": 0.09, "UA": 0.43, "BY": 0.05, "KZ": 0.12, "IT": 0.79, "CH": 0.88, "AT": 0.79,
    "PL": 0.50, "VN": 0.10, "CN": 0.04, "TW": 0.78, "HK": 0.25, "SG": 0.37, "BR": 0.52, "PT": 0.86,
    "IR": 0.08, "AF": 0.02, "RS": 0.30, "BA": 0.38, "ID": 0.45, "MY": 0.42, "KR": 0.79, "NO": 0.91,
    "FI": 0.86, "DK": 0.90, "TR": 0.12, "NG": 0.32, "ZA": 0.62, "KE": 0.38, "PK": 0.26, "BD": 0.12,
    "IL": 0.60, "GR": 0.73, "CZ": 0.78, "RO": 0.62, "IE": 0.86, "EE": 0.87, "HU": 0.38,
}


def encode(s: str) -> str:
    out = []
    for b in s.encode("utf-8"):
        c = chr(b)
        if c.isascii() and (c.isalnum() or c in "-_.~"):
            out.append(c)
        else:
            out.append("%%%02X" % b)
    return "".join(out)


def action_url(code, params, cont=None):
    url = ACTION.format(host=f"{code}.wikipedia.org") + "?action=query&format=json&formatversion=2"
    pairs = list(params) + sorted((cont or {}).items())
    for k, v in pairs:
        url += f"&{encode(k)}={encode(v)}"
    return url


def ordered_countries(lead):
    return lead + [c for c in COUNTRIES if c not in lead]


def bucket_estimate(ceil):
    lo = max(1, ceil - 9)
    return math.sqrt(lo * ceil)


def entropy(values):
    total = math.fsum(values)
    return -math.fsum((v / total) * math.log(v / total) for v in values if v > 0)


def shares(n, beta, rng):
    w = [math.exp(-beta * i) * rng.uniform(0.95, 1.05) for i in range(n)]
    t = math.fsum(w)
    return [x / t for x in w]


def solve(target, n, seed, render):
    """Bisect the decay rate so that render(shares) has the target entropy."""
    lo, hi = 0.0, 12.0
    for _ in range(80):
        mid = (lo + hi) / 2
        if entropy(render(shares(n, mid, random.Random(seed)))) > target:
            lo = mid
        else:
            hi = mid
    return shares(n, (lo + hi) / 2, random.Random(seed))


def views_counts(p, total):
    return [round(x * total) for x in p]


def editor_ceils(p, total):
    out = []
    for x in p:
        n = x * total
        out.append(0 if n < 0.5 else 10 * math.ceil(n / 10))
    return out


class Recorder:
    def __init__(self, root):
        self.root = root
        self.n = 0

    def add(self, name, url, status, body, headers=None):
        d = self.root / f"{self.n:03d}-{name}"
        self.n += 1
        d.mkdir(parents=True)
        (d / "request.json").write_text(json.dumps({"method": "GET", "url": url}, indent=2, ensure_ascii=False) + "\n")
        lines = [str(status)] + [f"{k}: {v}" for k, v in (headers or {}).items()]
        (d / "response.status").write_text("\n".join(lines) + "\n")
        if not isinstance(body, str):
            body = json.dumps(body, ensure_ascii=False, separators=(",", ":"))
        (d / "response.body").write_text(body)


def paged(rec, name, code, params, list_name, items, cont_key, page=500):
    cont = None
    for i in range(0, max(len(items), 1), page):
        chunk = items[i:i + page]
        body = {"batchcomplete": True, "query": {list_name: chunk}}
        nxt = None
        if i + page < len(items):
            nxt = {cont_key: str(items[i + page].get("name", items[i + page].get("id"))), "continue": "-||"}
            body = {"continue": nxt, "query": {list_name: chunk}}
        rec.add(f"{name}-{i // page}", action_url(code, params, cont), 200, body)
        cont = nxt


def main():
    rec_root = ROOT / "recorded"
    if rec_root.exists():
        shutil.rmtree(rec_root)
    year, month = MONTH
    measured = {}
    providers = {"ores_quality": {}, "controversiality": {}, "source_reliability": {}, "media_referrals": {}}
    for idx, (code, spec) in enumerate(WIKIS.items()):
        (articles, pmul, epa, users, active, elev, elev_active, (f_on, f_off), blocks, views,
         ed_low, ed_high, e_target, v_target, lead) = spec
        rng = random.Random(1000 + idx)
        rec = Recorder(rec_root / f"{code}.wikipedia")
        countries = ordered_countries(lead)[:45]

        stats = {
            "pages": int(articles * pmul), "articles": articles, "edits": int(articles * epa),
            "images": int(articles * 0.1), "users": users, "activeusers": active,
            "admins": max(1, elev // 4), "jobs": 0, "queued-massmessages": 0,
        }
        site_url = action_url(code, [("meta", "siteinfo"), ("siprop", "statistics")])
        if code == "de":
            # a transient outage that the client must retry through
            rec.add("siteinfo-503", site_url, 503, "Service Unavailable", {"Retry-After": "1"})
            rec.add("siteinfo-502", site_url, 502, "Bad Gateway")
        rec.add("siteinfo", site_url, 200, {"batchcomplete": True, "query": {"statistics": stats}})

        cur = CURATED.get(code)
        if cur and cur[4]:
            title = f"Category:{cur[4]}"
            url = action_url(code, [("prop", "categoryinfo"), ("titles", title)])
            if code == "no":
                rec.add("stubs", url, 200, {"batchcomplete": True, "query": {"pages": [{"ns": 14, "title": title, "missing": True}]}})
            else:
                share = STUB_SHARE.get(code, 0.25 + 0.3 * rng.random())
                size = int(articles * share)
                rec.add("stubs", url, 200, {"batchcomplete": True, "query": {"pages": [
                    {"pageid": 10_000 + idx, "ns": 14, "title": title,
                     "categoryinfo": {"size": size + 12, "pages": size, "files": 0, "subcats": 12}}]}})

        groups = "|".join(ELEVATED)
        holders = [{"userid": 1000 + i, "name": f"{code.upper()} user {i:05d}"} for i in range(elev)]
        paged(rec, "elevated", code, [("list", "allusers"), ("augroup", groups), ("aulimit", "max")],
              "allusers", holders, "aufrom")
        active_holders = holders[:elev_active]
        paged(rec, "elevated-active", code,
              [("list", "allusers"), ("augroup", groups), ("aulimit", "max"), ("auactiveusers", "1")],
              "allusers", active_holders, "aufrom")

        af_params = [("list", "abusefilters"), ("abfprop", "id|status"), ("abflimit", "max")]
        if code == "war":
            rec.add("abusefilters", action_url(code, af_params), 200, {"error": {
                "code": "badvalue", "info": "Unrecognized value for parameter \"list\": abusefilters."}})
        else:
            filters = [{"id": i + 1, "enabled": True} for i in range(f_on)]
            filters += [{"id": f_on + i + 1, "enabled": False} for i in range(f_off)]
            paged(rec, "abusefilters", code, af_params, "abusefilters", filters, "abfstartid")
        block_items = [{"id": 50_000 + i} for i in range(blocks)]
        paged(rec, "blocks", code,
              [("list", "blocks"), ("bkshow", "account"), ("bkprop", "id"), ("bklimit", "max")],
              "blocks", block_items, "bkcontinue")

        vp = solve(v_target, len(countries), 2000 + idx, lambda p: [c for c in views_counts(p, views) if c >= 100])
        vcounts = views_counts(vp, views)
        vrows = [{"country": c, "views_ceil": n, "rank": r + 1}
                 for r, (c, n) in enumerate(zip(countries, vcounts)) if n >= 100]
        vrows.append({"country": "--", "views_ceil": int(views * 0.004), "rank": len(vrows) + 1})
        vurl = f"{REST}/metrics/pageviews/top-by-country/{code}.wikipedia.org/all-access/{year:04d}/{month:02d}"
        vbody = {"items": [{"project": f"{code}.wikipedia", "access": "all-access", "year": str(year),
                            "month": f"{month:02d}", "countries": vrows}]}
        if code == "fr":
            rec.add("views-429", vurl, 429, {"type": "throttled"}, {"Retry-After": "2"})
        rec.add("views", vurl, 200, vbody)

        estimates = {}
        if ed_low + ed_high > 0:
            def render(p):
                low = editor_ceils(p, ed_low)
                high = editor_ceils(p, ed_high)
                return [(bucket_estimate(a) if a else 0) + (bucket_estimate(b) if b else 0) for a, b in zip(low, high)]
            ep = solve(e_target, len(countries), 3000 + idx, render)
            for level, total in (("5..99-edits", ed_low), ("100..-edits", ed_high)):
                ceils = editor_ceils(ep, total)
                rows = [{"country": c, "editors-ceil": n} for c, n in zip(countries, ceils) if n > 0]
                for c, n in zip(countries, ceils):
                    if n > 0:
                        estimates[c] = estimates.get(c, 0) + bucket_estimate(n)
                url = f"{REST}/metrics/editors/by-country/{code}.wikipedia.org/{level}/{year:04d}/{month:02d}"
                rec.add(f"editors-{level[:3].strip('.')}", url, 200, {"items": [{
                    "project": f"{code}.wikipedia", "activity-level": level, "year": str(year),
                    "month": f"{month:02d}", "results": rows}]})
        # "is" has no editors-by-country data: the replayer answers 404

        measured[code] = (
            entropy(list(estimates.values())) if estimates else None,
            entropy([r["views_ceil"] for r in vrows if r["country"] != "--"]),
            articles,
        )

        if code not in ("war", "arz", "is"):
            providers["ores_quality"][f"{code}.wikipedia"] = {"mean_quality": round(rng.uniform(1.2, 3.4), 3)}
        if code not in ("ceb", "war", "is", "gl"):
            providers["controversiality"][f"{code}.wikipedia"] = {
                "controversial_share": round(rng.uniform(0.001, 0.02), 5),
                "locked_share": round(rng.uniform(0.0005, 0.01), 5),
            }
        if code in ("en", "de", "fr", "es", "ru", "ja", "it", "pt", "zh", "ar", "pl", "nl"):
            rel = [rng.uniform(0.4, 0.7), rng.uniform(0.1, 0.3), rng.uniform(0.02, 0.08), rng.uniform(0.005, 0.03)]
            t = math.fsum(rel)
            providers["source_reliability"][f"{code}.wikipedia"] = {
                k: round(v / t, 5)
                for k, v in zip(["generally_reliable", "no_consensus", "unreliable", "deprecated"], rel)
            }
        if code in ("en", "de", "fr", "es", "ja", "ar", "ceb", "war", "arz", "ru"):
            media = [rng.uniform(0.5, 0.8), rng.uniform(0.02, 0.12), rng.uniform(0.01, 0.06), rng.uniform(0.1, 0.3)]
            t = math.fsum(media)
            providers["media_referrals"][f"{code}.wikipedia"] = {
                k: round(v / t, 5) for k, v in zip(["search", "social", "news", "direct"], media)
            }

    check(measured)

    curated = {}
    for code, (tools, stewards, sreq, dreq, stub) in CURATED.items():
        entry = {
            "patrolling_tools": tools, "stewards_with_language": stewards,
            "steward_requests": sreq, "deletion_requests": dreq,
            "provenance": "synthetic operator survey, 2021-04",
        }
        if stub:
            entry["stub_category"] = stub
        curated[f"{code}.wikipedia"] = entry
    write_json(ROOT / "curated.json", curated)

    notes = {
        "ores_quality": "synthetic article-quality model output (mean predicted class, 0-5)",
        "controversiality": "synthetic controversiality scores (shares of articles)",
        "source_reliability": "synthetic citation reliability classes (shares of references)",
        "media_referrals": "synthetic referrer distribution (shares of external visits)",
    }
    pdir = ROOT / "providers"
    pdir.mkdir(parents=True, exist_ok=True)
    for pid, scores in providers.items():
        write_json(pdir / f"{pid}.json", {"provider": pid, "provenance": notes[pid], "scores": scores})
    write_json(ROOT / "democracy_index.json", {
        "provenance": "illustrative per-country scores in [0, 1] for tests; not an official index",
        "scores": DEMOCRACY,
    })


def check(measured):
    big = {c: m for c, m in measured.items() if m[2] > 500_000 and m[0] is not None}
    e_med = statistics.median(m[0] for m in big.values())
    v_med = statistics.median(m[1] for m in big.values())
    for code, (e, v, _) in sorted(big.items(), key=lambda kv: kv[1][1]):
        print(f"{code:>4} edit {e:.3f} view {v:.3f}")
    print(f"median edit {e_med:.3f} view {v_med:.3f}")
    views = sorted(m[1] for m in big.values())
    assert big["ja"][1] == views[0] and views[0] < views[1], "ja must have the strictly lowest view entropy"
    for c in ("en", "es", "ar"):
        assert big[c][0] > e_med and big[c][1] > v_med, c
    for c in ("ceb", "war"):
        assert big[c][0] > e_med and big[c][1] < v_med, c
    assert big["arz"][1] > big["arz"][0], "arz"
    xs = [m[0] for m in big.values()]
    ys = [m[1] for m in big.values()]
    mx, my = statistics.fmean(xs), statistics.fmean(ys)
    slope = math.fsum((x - mx) * (y - my) for x, y in zip(xs, ys)) / math.fsum((x - mx) ** 2 for x in xs)
    print(f"slope {slope:.3f}")
    assert slope > 0


def write_json(path, value):
    path.write_text(json.dumps(value, indent=2, sort_keys=True, ensure_ascii=False) + "\n")


if __name__ == "__main__":
    main()
