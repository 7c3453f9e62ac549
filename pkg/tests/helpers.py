"""Shared generators for randomized tests."""

from specnet.lifting import BasePath, face_loop, invert_move, move_endpoints, random_path


def points_along(tri, path):
    out, cur = [path.start], path.start
    for mv in path.moves:
        if mv[0] != "F":
            cur = move_endpoints(tri, mv)[1]
        out.append(cur)
    return out


def face_loop_at(tri, x):
    """The branch-point triple loop of the triangle of x, rotated to start at x, or None."""
    if not tri.in_triangle(x):
        return None
    loop = face_loop(tri, tri.face(x))
    pts = points_along(tri, loop)
    if x not in pts[:-1]:
        return None
    k = pts.index(x)
    return loop.moves[k:] + loop.moves[:k]


def insert_contractible(tri, path, rng, n_insert=2):
    """Insert ray double crossings (a move and its inverse) and branch-point triple loops."""
    moves = list(path.moves)
    for _ in range(n_insert):
        pts = points_along(tri, BasePath(path.start, tuple(moves)))
        k = int(rng.integers(len(pts)))
        x = pts[k]
        loop = face_loop_at(tri, x) if rng.random() < 0.5 else None
        if loop is not None:
            if rng.random() < 0.5:
                loop = tuple(invert_move(m) for m in reversed(loop))
            ins = list(loop)
        else:
            opts = [m for m in _moves_from(tri, x)]
            mv = opts[int(rng.integers(len(opts)))]
            ins = [mv, invert_move(mv)]
        moves[k:k] = ins
    return BasePath(path.start, tuple(moves))


def _moves_from(tri, x):
    from specnet.lifting import graph_moves_from
    return graph_moves_from(tri, x)


def random_word(tri, rng, max_len=12):
    return random_path(tri, rng, int(rng.integers(0, max_len + 1)))


# filled by the acceptance suite, printed in the pytest terminal summary
ACCEPTANCE_LINES = []
