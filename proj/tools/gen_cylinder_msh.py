#!/usr/bin/env python3
"""Write an MSH 2.2 O-grid of triangles around the unit cylinder.

The annulus between the circle of radius 1 and the square (-L, L)^2 is split
into n_theta x n_r quads with geometric radial stretching, two triangles each.
Physical tags: 1 = cylinder wall, 2 = outer square.
"""
import argparse
import math


def build(n_theta, n_r, half_width, ratio):
    rings = n_r + 1
    weights = [(ratio**i - 1.0) / (ratio**n_r - 1.0) for i in range(rings)]
    nodes = []
    for i in range(rings):
        s = weights[i]
        for j in range(n_theta):
            th = 2.0 * math.pi * j / n_theta
            c, sn = math.cos(th), math.sin(th)
            m = max(abs(c), abs(sn))
            sq = (half_width * c / m, half_width * sn / m)
            nodes.append(((1 - s) * c + s * sq[0], (1 - s) * sn + s * sq[1]))

    def nid(i, j):
        return i * n_theta + (j % n_theta) + 1

    lines, tris = [], []
    for j in range(n_theta):
        lines.append((1, nid(0, j + 1), nid(0, j)))  # wall, traversed clockwise
        lines.append((2, nid(n_r, j), nid(n_r, j + 1)))
    for i in range(n_r):
        for j in range(n_theta):
            a, b, c, d = nid(i, j), nid(i, j + 1), nid(i + 1, j + 1), nid(i + 1, j)
            tris.append((a, b, c))
            tris.append((a, c, d))
    return nodes, lines, tris


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("output")
    ap.add_argument("--n-theta", type=int, default=64)
    ap.add_argument("--n-r", type=int, default=33)
    ap.add_argument("--half-width", type=float, default=12.0)
    ap.add_argument("--ratio", type=float, default=1.08)
    args = ap.parse_args()
    nodes, lines, tris = build(args.n_theta, args.n_r, args.half_width, args.ratio)
    with open(args.output, "w") as out:
        out.write("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n")
        out.write('$PhysicalNames\n3\n1 1 "cylinder"\n1 2 "outer"\n2 3 "fluid"\n$EndPhysicalNames\n')
        out.write("$Nodes\n%d\n" % len(nodes))
        for k, (x, y) in enumerate(nodes, 1):
            out.write("%d %.17g %.17g 0\n" % (k, x, y))
        out.write("$EndNodes\n$Elements\n%d\n" % (len(lines) + len(tris)))
        k = 1
        for tag, a, b in lines:
            out.write("%d 1 2 %d %d %d %d\n" % (k, tag, tag, a, b))
            k += 1
        for a, b, c in tris:
            out.write("%d 2 2 3 3 %d %d %d\n" % (k, a, b, c))
            k += 1
        out.write("$EndElements\n")


if __name__ == "__main__":
    main()
