"""Straightforward SPIHT encoder used as an oracle for the production coder.

Written from the published list rules with explicit coordinates, recursive
descendant enumeration and brute-force set tests. Nothing here is shared with
``fusespiht.spiht``; it is slow and only meant for small grids.
"""


def offspring(i, j, H, W, L):
    hL, wL = H >> L, W >> L
    if i < hL and j < wL:
        di, dj = i % 2, j % 2
        if di == 0 and dj == 0:
            return []
        bi = i - di + di * hL
        bj = j - dj + dj * wL
        return [(bi, bj), (bi, bj + 1), (bi + 1, bj), (bi + 1, bj + 1)]
    if 2 * i >= H or 2 * j >= W:
        return []
    return [(2 * i, 2 * j), (2 * i, 2 * j + 1), (2 * i + 1, 2 * j), (2 * i + 1, 2 * j + 1)]


def descendants(i, j, H, W, L):
    out = []
    for c in offspring(i, j, H, W, L):
        out.append(c)
        out.extend(descendants(c[0], c[1], H, W, L))
    return out


def encode(coeffs, L):
    """Return the payload bit list for an integer grid (list of lists)."""
    H, W = len(coeffs), len(coeffs[0])
    top = max(abs(v) for row in coeffs for v in row)
    if top == 0:
        return []
    P = 0
    while (1 << (P + 1)) <= top:
        P += 1

    def mag(c):
        return abs(coeffs[c[0]][c[1]])

    def set_significant(coords, T):
        return any(mag(c) >= T for c in coords)

    hL, wL = H >> L, W >> L
    LIP = [(i, j) for i in range(hL) for j in range(wL)]
    LIS = [[(i, j), "A"] for i in range(hL) for j in range(wL) if offspring(i, j, H, W, L)]
    LSP = []
    bits = []

    for n in range(P, -1, -1):
        T = 1 << n
        old_lsp = list(LSP)

        still = []
        for c in LIP:
            if mag(c) >= T:
                bits.append(1)
                bits.append(1 if coeffs[c[0]][c[1]] < 0 else 0)
                LSP.append(c)
            else:
                bits.append(0)
                still.append(c)
        LIP = still

        k = 0
        while k < len(LIS):
            entry = LIS[k]
            (i, j), kind = entry
            if kind == "A":
                D = descendants(i, j, H, W, L)
                if set_significant(D, T):
                    bits.append(1)
                    for c in offspring(i, j, H, W, L):
                        if mag(c) >= T:
                            bits.append(1)
                            bits.append(1 if coeffs[c[0]][c[1]] < 0 else 0)
                            LSP.append(c)
                        else:
                            bits.append(0)
                            LIP.append(c)
                    grand = [d for c in offspring(i, j, H, W, L) for d in descendants(c[0], c[1], H, W, L)]
                    if grand:
                        LIS.append([(i, j), "B"])
                    LIS[k] = None
                else:
                    bits.append(0)
            else:
                grand = [d for c in offspring(i, j, H, W, L) for d in descendants(c[0], c[1], H, W, L)]
                if set_significant(grand, T):
                    bits.append(1)
                    for c in offspring(i, j, H, W, L):
                        LIS.append([c, "A"])
                    LIS[k] = None
                else:
                    bits.append(0)
            k += 1
        LIS = [e for e in LIS if e is not None]

        for c in old_lsp:
            bits.append((mag(c) >> n) & 1)
    return bits
