#!/usr/bin/env python3
"""Convert MS MARCO v1 JSON-lines to the instance JSON-lines format.

Each MARCO line holds a query and its retrieved passages with is_selected
judgments. Every passage becomes one sentence candidate labeled by
is_selected; the instance passage is the passages joined with spaces.
Dependency parses are not part of MARCO, so the conllu field is left out —
run a UD parser separately and fill it in if assertion extraction is
needed.

Usage: marco_to_jsonl.py dev_v1.1.json > dev.jsonl
"""

import json
import sys


def convert(path, out):
    with open(path, encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            record = json.loads(line)
            sentences = [
                {
                    "text": p["passage_text"],
                    "label": 1 if p.get("is_selected") else 0,
                }
                for p in record.get("passages", [])
            ]
            instance = {
                "id": str(record["query_id"]),
                "question": record["query"],
                "passage": " ".join(s["text"] for s in sentences),
                "candidates": [],
                "sentences": sentences,
            }
            out.write(json.dumps(instance) + "\n")


if __name__ == "__main__":
    if len(sys.argv) != 2:
        sys.exit(__doc__.strip())
    convert(sys.argv[1], sys.stdout)
