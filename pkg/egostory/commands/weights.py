import json
import sys

from egostory.core.importance import load_model, rank_weights


def register(subparsers) -> None:
    p = subparsers.add_parser("weights", help="rank model terms by absolute weight")
    p.add_argument("model", help="model JSON path")
    p.add_argument("--top", type=int, default=15, help="number of terms to show (0 = all)")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=run)


def run(args) -> int:
    ranked = rank_weights(load_model(args.model))
    if args.top:
        ranked = ranked[: args.top]
    if args.json:
        sys.stdout.write(json.dumps([{"term": t, "weight": w} for t, w in ranked], indent=2) + "\n")
        return 0
    width = max(len(t) for t, _ in ranked) if ranked else 0
    for rank, (term, weight) in enumerate(ranked, start=1):
        sys.stdout.write(f"{rank:>3}  {term:<{width}}  {weight:.6g}\n")
    return 0
