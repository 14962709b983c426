#!/usr/bin/env python3
"""Convert a BIF network description into the line-oriented .net format.

    var <name> <k> <state0> ... <state{k-1}>
    arc <parent> <child>
    cpt <child> | <parent-state...> : p0 ... p{k-1}

Probability rows are renormalized so they sum to one in double precision
(published BIF files round rows such as 0.3333333 x 3).
"""
import re
import sys


def parse_bif(text):
    variables = {}
    order = []
    for m in re.finditer(
        r"variable\s+(\S+)\s*\{\s*type\s+discrete\s*\[\s*(\d+)\s*\]\s*\{([^}]*)\}", text
    ):
        name = m.group(1)
        states = [s.strip() for s in m.group(3).split(",")]
        assert len(states) == int(m.group(2)), name
        variables[name] = states
        order.append(name)

    cpts = {}
    for m in re.finditer(r"probability\s*\(\s*([^)]*)\)\s*\{([^}]*)\}", text):
        head = m.group(1)
        body = m.group(2)
        if "|" in head:
            child, parents = head.split("|")
            parents = [p.strip() for p in parents.split(",")]
        else:
            child, parents = head, []
        child = child.strip()
        rows = []
        table = re.search(r"table\s+([^;]*);", body)
        if table:
            probs = [float(x) for x in re.split(r"[,\s]+", table.group(1).strip()) if x]
            rows.append(((), probs))
        for row in re.finditer(r"\(([^)]*)\)\s*([^;]*);", body):
            config = tuple(s.strip() for s in row.group(1).split(","))
            probs = [float(x) for x in re.split(r"[,\s]+", row.group(2).strip()) if x]
            rows.append((config, probs))
        cpts[child] = (parents, rows)
    return order, variables, cpts


def main():
    if len(sys.argv) != 3:
        sys.exit("usage: bif_to_net.py <in.bif> <out.net>")
    with open(sys.argv[1], encoding="utf-8") as f:
        order, variables, cpts = parse_bif(f.read())
    out = [f"# converted from {sys.argv[1].split('/')[-1]}"]
    for name in order:
        states = variables[name]
        out.append(f"var {name} {len(states)} {' '.join(states)}")
    for name in order:
        for parent in cpts[name][0]:
            out.append(f"arc {parent} {name}")
    for name in order:
        parents, rows = cpts[name]
        for config, probs in rows:
            total = sum(probs)
            probs = [p / total for p in probs]
            out.append(f"cpt {name} | {' '.join(config)} : {' '.join(repr(p) for p in probs)}")
    with open(sys.argv[2], "w", encoding="utf-8") as f:
        f.write("\n".join(out) + "\n")


if __name__ == "__main__":
    main()
