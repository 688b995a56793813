#!/usr/bin/env python3
# Copyright 2026 The ngramkit Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Builds data/kjv/{corpus,lexicon}.txt from the 1769 KJV verse dump.

The verse dump ships in the public-domain `kjv` npm package
(json/verses-1769.json). Usage:

    npm pack kjv && tar xzf kjv-1.0.0.tgz
    python3 tools/make_kjv_corpus.py package/json/verses-1769.json data/kjv
"""

import json
import re
import sys
from pathlib import Path

TOKEN = re.compile(r"[a-z]+(?:'[a-z]+)*|[.,;:!?()']")


def normalize(verse: str) -> list[str]:
    verse = verse.replace("[", "").replace("]", "").replace("#", " ")
    return TOKEN.findall(verse.lower())


def main() -> int:
    src, out = Path(sys.argv[1]), Path(sys.argv[2])
    verses = json.loads(src.read_text(encoding="utf-8"))
    out.mkdir(parents=True, exist_ok=True)
    vocab = set()
    n_tokens = 0
    with (out / "corpus.txt").open("w", encoding="utf-8") as f:
        for text in verses.values():
            tokens = normalize(text)
            if not tokens:
                continue
            vocab.update(tokens)
            n_tokens += len(tokens)
            f.write(" ".join(tokens) + "\n")
    (out / "lexicon.txt").write_text(
        "".join(w + "\n" for w in sorted(vocab)), encoding="utf-8")
    print(f"{len(verses)} verses, {n_tokens} tokens, {len(vocab)} types")
    return 0


if __name__ == "__main__":
    sys.exit(main())
