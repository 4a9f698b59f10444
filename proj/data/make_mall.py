"""Generates data/mall.json: a synthetic three-storey shopping mall (50 nodes, exits at both ends
of the ground floor). Re-run only when the layout is deliberately changed."""
import argparse
import json

ap = argparse.ArgumentParser()
ap.add_argument("--spacing", type=float, default=8.0, help="metres between neighbouring shop fronts")
ap.add_argument("--aps", default="exits", help="exits | exits+atria | comma-separated node ids")
ap.add_argument("--out", default="mall.json")
args = ap.parse_args()
S = args.spacing

nodes, edges = [], []


def node(i, x, y, floor, kind):
    nodes.append({"id": i, "x_m": float(x), "y_m": float(y), "floor": floor, "kind": kind})


def edge(a, b, length=None):
    e = {"a": a, "b": b}
    if length is not None:
        e["length_m"] = float(length)
    edges.append(e)


# Ground floor: two parallel corridors of 9 shop fronts, exits west and east.
node(0, -S, S / 2, 0, "exit")
for k in range(9):
    node(1 + k, S * k, 0, 0, "landmark")
    node(10 + k, S * k, S, 0, "landmark" if k % 2 == 0 else "plain")
node(19, 9 * S, S / 2, 0, "exit")
for k in range(8):
    edge(1 + k, 2 + k)
    edge(10 + k, 11 + k)
for k in (0, 3, 5, 8):
    edge(1 + k, 10 + k)
edge(0, 1)
edge(0, 10)
edge(9, 19)
edge(18, 19)


def upper(base, floor):
    # 7 + 7 shop fronts around a central atrium node.
    for k in range(7):
        node(base + k, S + S * k, 0, floor, "landmark")
        node(base + 7 + k, S + S * k, S, floor, "landmark" if k % 2 == 0 else "plain")
    node(base + 14, 4 * S, S / 2, floor, "plain")
    for k in range(6):
        edge(base + k, base + k + 1)
        edge(base + 7 + k, base + 8 + k)
    edge(base, base + 7)
    edge(base + 6, base + 13)
    edge(base + 3, base + 14)
    edge(base + 10, base + 14)


upper(20, 1)
upper(35, 2)

# Stairs at both ends and a central escalator stack.
edge(2, 20, S)
edge(17, 33, S)
edge(27, 42, S)
edge(26, 41, S)
edge(5, 34, S + 2)
edge(34, 49, S + 2)

if args.aps == "exits":
    aps = [0, 19]
elif args.aps == "exits+atria":
    aps = [0, 19, 34, 49]
else:
    aps = [int(x) for x in args.aps.split(",")]

doc = {"nodes": nodes, "edges": edges, "access_points": aps}
with open(args.out, "w") as f:
    json.dump(doc, f, indent=1)
    f.write("\n")
print(len(nodes), "nodes", len(edges), "edges")
