#!/usr/bin/env python3
"""Convert a WikiQA TSV split to the instance JSON-lines format.

WikiQA ships tab-separated rows of QuestionID, Question, DocumentID,
DocumentTitle, SentenceID, Sentence, Label. Rows sharing a QuestionID
become one instance whose sentence candidates keep file order; the passage
is the sentences joined with spaces. Dependency parses are not part of
WikiQA, so the conllu field is left out — run a UD parser separately and
fill it in if assertion extraction is needed.

Usage: wikiqa_to_jsonl.py WikiQA-train.tsv > train.jsonl
"""

import csv
import json
import sys


def convert(path, out):
    with open(path, newline="", encoding="utf-8") as f:
        rows = list(csv.DictReader(f, delimiter="\t"))
    order = []
    grouped = {}
    for row in rows:
        qid = row["QuestionID"]
        if qid not in grouped:
            order.append(qid)
            grouped[qid] = {"question": row["Question"], "sentences": []}
        grouped[qid]["sentences"].append(
            {"text": row["Sentence"], "label": int(row["Label"])}
        )
    for qid in order:
        g = grouped[qid]
        instance = {
            "id": qid,
            "question": g["question"],
            "passage": " ".join(s["text"] for s in g["sentences"]),
            "candidates": [],
            "sentences": g["sentences"],
        }
        out.write(json.dumps(instance) + "\n")


if __name__ == "__main__":
    if len(sys.argv) != 2:
        sys.exit(__doc__.strip())
    convert(sys.argv[1], sys.stdout)
