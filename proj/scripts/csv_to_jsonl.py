#!/usr/bin/env python3
"""Convert a V-SZZ / Java-SZZ style CSV into the JSON-lines dataset format.

One output object per (cve_id, fix_commit):
  {"cve_id", "repo", "fix_commit", "true_vics", "description", "language"}

Rows sharing a CVE and fix commit are merged, so both the one-row-per-pair
layout and the one-row-per-case layout (list cells separated by ';', ',' or
whitespace) work. Column names are matched case-insensitively against the
aliases below; override with --col FIELD=HEADER.
"""

import argparse
import csv
import json
import re
import sys

ALIASES = {
    "cve_id": ["cve_id", "cve", "cveid", "vuln_id", "id"],
    "repo": ["repo", "repository", "repo_url", "project", "repo_name", "project_url"],
    "fix_commit": ["fix_commit", "fixing_commit", "vfc", "fix", "fix_commit_hash", "fixing_commit_hash"],
    "true_vics": ["true_vics", "vic", "vics", "inducing_commit", "inducing_commits", "bic", "bug_inducing_commit",
                  "vulnerability_inducing_commit", "induce_commit"],
    "description": ["description", "cve_description", "desc", "summary"],
    "language": ["language", "lang"],
}
LIST_SPLIT = re.compile(r"[;,\s]+")
HEX = re.compile(r"^[0-9a-fA-F]{7,40}$")


def resolve_columns(header, overrides):
    lower = {h.strip().lower(): h for h in header}
    cols = {}
    for field, names in ALIASES.items():
        if field in overrides:
            if overrides[field] not in header:
                sys.exit(f"error: column '{overrides[field]}' not in header")
            cols[field] = overrides[field]
            continue
        for n in names:
            if n in lower:
                cols[field] = lower[n]
                break
    for required in ("cve_id", "repo", "fix_commit", "true_vics"):
        if required not in cols:
            sys.exit(f"error: no column for '{required}' (header: {', '.join(header)}); use --col {required}=HEADER")
    return cols


def repo_url(value, base):
    value = value.strip()
    if "://" in value or value.startswith("git@") or value.startswith("/"):
        return value
    if re.fullmatch(r"[\w.-]+/[\w.-]+", value):
        return f"{base.rstrip('/')}/{value}.git"
    return value


def split_hashes(cell, where):
    out = []
    for tok in LIST_SPLIT.split(cell.strip().strip("[]")):
        tok = tok.strip("'\"")
        if not tok:
            continue
        if not HEX.match(tok):
            sys.exit(f"error: {where}: '{tok}' is not a commit id")
        out.append(tok.lower())
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("csv", help="input CSV ('-' for stdin)")
    ap.add_argument("-o", "--out", default="-", help="output JSONL (default stdout)")
    ap.add_argument("--language", default="", help="language for rows without a language column (e.g. c, java)")
    ap.add_argument("--repo-base", default="https://github.com", help="prefix for owner/name repo cells")
    ap.add_argument("--col", action="append", default=[], metavar="FIELD=HEADER")
    args = ap.parse_args()

    overrides = {}
    for spec in args.col:
        field, _, header = spec.partition("=")
        if field not in ALIASES or not header:
            sys.exit(f"error: bad --col '{spec}'")
        overrides[field] = header

    src = sys.stdin if args.csv == "-" else open(args.csv, newline="", encoding="utf-8")
    reader = csv.DictReader(src)
    cols = resolve_columns(reader.fieldnames or [], overrides)

    cases = {}
    for lineno, row in enumerate(reader, start=2):
        where = f"line {lineno}"
        cve = row[cols["cve_id"]].strip()
        fixes = split_hashes(row[cols["fix_commit"]], where)
        if not cve or not fixes:
            sys.exit(f"error: {where}: missing cve_id or fix_commit")
        vics = split_hashes(row[cols["true_vics"]], where)
        for fix in fixes:
            key = (cve, fix)
            case = cases.get(key)
            if case is None:
                case = cases[key] = {
                    "cve_id": cve,
                    "repo": repo_url(row[cols["repo"]], args.repo_base),
                    "fix_commit": fix,
                    "true_vics": [],
                    "description": row[cols["description"]].strip() if "description" in cols else "",
                    "language": (row[cols["language"]].strip() if "language" in cols else "") or args.language,
                }
            for v in vics:
                if v not in case["true_vics"]:
                    case["true_vics"].append(v)

    dst = sys.stdout if args.out == "-" else open(args.out, "w", encoding="utf-8")
    skipped = 0
    for case in cases.values():
        if not case["true_vics"]:
            skipped += 1
            continue
        dst.write(json.dumps(case, ensure_ascii=False) + "\n")
    if skipped:
        print(f"warning: {skipped} case(s) without inducing commits dropped", file=sys.stderr)


if __name__ == "__main__":
    main()
