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

"""Writes the 100-sentence keyword augmentation fixture."""

import os
import random
import sys

FILLER = ("the of and to in that for is on with as it by at this from "
          "be or an are was which were have has had not but all").split()

# (keyword, how many sentences carry it alone)
PLANTED = [("alpha", 6), ("beta gamma", 2), ("delta", 24), ("zeta", 3)]


def sentence(rng, keyword=None, extra=None):
  words = [rng.choice(FILLER) for _ in range(rng.randint(3, 12))]
  for kw in (keyword, extra):
    if kw:
      pos = rng.randint(0, len(words))
      words[pos:pos] = kw.split()
  return " ".join(words)


def main(out_dir):
  rng = random.Random(20261018)
  lines = []
  for kw, n in PLANTED:
    lines += [sentence(rng, kw) for _ in range(n)]
  # epsilon only ever shares a sentence with alpha.
  lines += [sentence(rng, "epsilon", "alpha") for _ in range(3)]
  # a few sentences hold delta twice.
  lines += [sentence(rng, "delta", "delta") for _ in range(4)]
  while len(lines) < 100:
    lines.append(sentence(rng))
  rng.shuffle(lines)
  with open(os.path.join(out_dir, "corpus.txt"), "w") as f:
    f.write("\n".join(lines) + "\n")
  with open(os.path.join(out_dir, "spec.tsv"), "w") as f:
    f.write("alpha\t40\nbeta gamma\t60\ndelta\t10\nepsilon\t5\n"
            "zeta\t3\nomega\t2\n")


if __name__ == "__main__":
  main(sys.argv[1])
