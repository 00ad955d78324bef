#!/usr/bin/env python3
"""Regenerates the bundled word list and phrase list under data/.

Requires the `wordfreq` package. Output is deterministic for a fixed seed,
so rerunning it reproduces the committed files byte for byte.
"""
import argparse
import random
import re
from pathlib import Path

from wordfreq import top_n_list

LATIN = re.compile(r"^[a-zà-ÿ]+$")
CJK = re.compile(r"^[一-鿿]+$")


def wordlist():
    words = []
    for lang, n in (("en", 30000), ("de", 4000), ("fr", 4000), ("es", 4000)):
        for w in top_n_list(lang, n):
            if LATIN.match(w) and len(w) >= 2 and not re.search(r"(.)\1\1", w):
                words.append(w)
    for w in top_n_list("zh", 6000):
        if CJK.match(w):
            words.append(w)
    seen = set()
    out = []
    for w in words:
        if w not in seen:
            seen.add(w)
            out.append(w)
    return out


def camel(ws):
    return ws[0] + "".join(w.capitalize() for w in ws[1:])


def phrases(rng, en, de, fr, es, zh, count):
    tlds = ["com", "net", "org", "io", "cn", "de"]
    intents = ["VIEW", "SEND", "MAIN", "BOOT_COMPLETED", "PACKAGE_ADDED", "DIAL", "CALL", "SCREEN_ON"]
    perms = ["INTERNET", "READ_PHONE_STATE", "ACCESS_FINE_LOCATION", "CAMERA", "READ_CONTACTS",
             "SEND_SMS", "RECEIVE_BOOT_COMPLETED", "WRITE_EXTERNAL_STORAGE", "GET_ACCOUNTS"]
    algos = ["AES", "AES/ECB/PKCS5Padding", "AES/CBC/PKCS5Padding", "DES", "DESede", "RSA",
             "MD5", "SHA-1", "SHA-256", "HmacSHA256", "RSA/ECB/PKCS1Padding"]
    agents = ["Mozilla/5.0 (Linux; Android 9; SM-G960F) AppleWebKit/537.36",
              "Dalvik/2.1.0 (Linux; U; Android 10)", "okhttp/3.12.1",
              "Mozilla/5.0 (iPhone; CPU iPhone OS 13_2 like Mac OS X)"]
    b64chars = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/"

    def w():
        return rng.choice(en)

    def sentence(pool, lo, hi):
        n = rng.randint(lo, hi)
        s = " ".join(rng.choice(pool) for _ in range(n))
        return s[0].upper() + s[1:] if rng.random() < 0.6 else s

    gens = [
        (30, lambda: sentence(en, 2, 7)),
        (6, lambda: sentence(en, 1, 3) + rng.choice([".", "!", "?", ":", "..."])),
        (8, lambda: camel([w() for _ in range(rng.randint(2, 4))])),
        (3, lambda: "_".join(w() for _ in range(rng.randint(2, 3)))),
        (3, lambda: "_".join(w() for _ in range(rng.randint(1, 3))).upper()),
        (5, lambda: f"{rng.choice(['https', 'http'])}://{rng.choice(['api', 'www', 'ads', 'cdn', 'sdk'])}.{w()}.{rng.choice(tlds)}/{w()}/{w()}"
                    + (f"?id={rng.randint(1, 99999)}" if rng.random() < 0.4 else "")),
        (1, lambda: f"{rng.choice(['content', 'file', 'market'])}://{w()}/{w()}"),
        (3, lambda: f"/data/data/com.{w()}.{w()}/{rng.choice(['files', 'cache', 'databases'])}/{w()}.{rng.choice(['db', 'xml', 'txt', 'dat'])}"),
        (1, lambda: f"/sdcard/{w()}/{w()}.{rng.choice(['png', 'jpg', 'log'])}"),
        (1, lambda: "android.intent.action." + rng.choice(intents)),
        (1, lambda: "android.permission." + rng.choice(perms)),
        (2, lambda: f"SELECT {w()}, {w()} FROM {w()} WHERE {w()} = ?"),
        (1, lambda: f"{rng.choice(['CREATE TABLE', 'DROP TABLE', 'DELETE FROM', 'INSERT INTO'])} {w()}"),
        (1, lambda: f"UPDATE {w()} SET {w()} = ?"),
        (2, lambda: "{" + f"\"{w()}\":\"{w()}\",\"{w()}\":{rng.randint(0, 999)}" + "}"),
        (2, lambda: f"{w()}.{w()}@{rng.choice(['gmail', 'mail', w()])}.{rng.choice(tlds)}"),
        (2, lambda: f"{rng.randint(2000, 2024)}-{rng.randint(1, 12):02d}-{rng.randint(1, 28):02d}"),
        (1, lambda: rng.choice(["yyyy-MM-dd", "HH:mm:ss", "dd/MM/yyyy", "yyyy-MM-dd HH:mm:ss"])),
        (4, lambda: str(rng.randint(0, 10 ** rng.randint(1, 11)))),
        (1, lambda: "+" + str(rng.randint(10 ** 9, 10 ** 12))),
        (1, lambda: f"{rng.randint(1, 254)}.{rng.randint(0, 255)}.{rng.randint(0, 255)}.{rng.randint(1, 254)}"),
        (1, lambda: f"{rng.randint(1, 9)}.{rng.randint(0, 20)}.{rng.randint(0, 99)}"),
        (1, lambda: rng.choice(algos)),
        (1, lambda: f"#{rng.randrange(16 ** 6):06X}"),
        (1, lambda: "com." + ".".join(w() for _ in range(rng.randint(1, 3))) + "." + camel([w(), w()]).capitalize()),
        (1, lambda: f"<{w()}>{w()}</{w()}>"),
        (1, lambda: rng.choice(agents)),
        (1, lambda: rng.choice(["UTF-8", "ISO-8859-1", "US-ASCII", "UTF-16"])),
        (4, lambda: sentence(de, 2, 6)),
        (3, lambda: sentence(fr, 2, 6)),
        (3, lambda: sentence(es, 2, 6)),
        (8, lambda: "".join(rng.choice(zh) for _ in range(rng.randint(1, 5)))),
        (1, lambda: "".join(rng.choice(zh) for _ in range(rng.randint(1, 3))) + rng.choice(["：", "，", "！", " ", ""]) + str(rng.randint(1, 99))),
        (0.15, lambda: "MII" + "".join(rng.choice(b64chars) for _ in range(rng.randint(20, 60)))),
        (0.1, lambda: "AIza" + "".join(rng.choice(b64chars[:62] + "-_") for _ in range(35))),
    ]
    weights = [g[0] for g in gens]
    out, seen = [], set()
    while len(out) < count:
        s = rng.choices(gens, weights=weights)[0][1]()
        if s and s not in seen and len(s) <= 120:
            seen.add(s)
            out.append(s)
    return out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "data"))
    ap.add_argument("--seed", type=int, default=20200624)
    ap.add_argument("--phrases", type=int, default=24000)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    words = wordlist()
    (out / "wordlist.txt").write_text("\n".join(words) + "\n", encoding="utf-8")

    rng = random.Random(args.seed)
    en = [w for w in top_n_list("en", 5000) if LATIN.match(w) and len(w) >= 2]
    de = [w for w in top_n_list("de", 2000) if LATIN.match(w) and len(w) >= 2]
    fr = [w for w in top_n_list("fr", 2000) if LATIN.match(w) and len(w) >= 2]
    es = [w for w in top_n_list("es", 2000) if LATIN.match(w) and len(w) >= 2]
    zh = [w for w in top_n_list("zh", 3000) if CJK.match(w)]
    ph = phrases(rng, en, de, fr, es, zh, args.phrases)
    (out / "phrases.txt").write_text("\n".join(ph) + "\n", encoding="utf-8")


if __name__ == "__main__":
    main()
