#!/usr/bin/env python3
"""Regenerates the bundled map documents under crates/core/assets/maps/.

Towns are Manhattan grids of two-way streets. Each street segment becomes two
directed roads whose centerlines sit right of the street axis, so opposing
traffic shares a median on the axis. Roads stop `GAP` meters short of each
junction center; the gap is the junction box.
"""
import json
import math
import os

OUT = os.path.join(os.path.dirname(__file__), "..", "crates", "core", "assets", "maps")
LANE_W = 3.5
GAP = 12.0


def right_normal(dx, dy):
    n = math.hypot(dx, dy)
    return dy / n, -dx / n


def grid_town(map_id, cols, rows, spacing, row_names, col_names, wide_rows=(), wide_cols=(),
              skip_edges=(), landmarks=(), lights=(), signs=()):
    junctions = {}
    jid = {}
    k = 1
    for r in range(rows):
        for c in range(cols):
            jid[(c, r)] = f"J{k}"
            junctions[(c, r)] = {"id": f"J{k}", "position": [c * spacing, r * spacing], "connections": []}
            k += 1

    edges = []
    for r in range(rows):
        for c in range(cols - 1):
            edges.append(((c, r), (c + 1, r), row_names[r], r in wide_rows))
    for c in range(cols):
        for r in range(rows - 1):
            edges.append(((c, r), (c, r + 1), col_names[c], c in wide_cols))
    edges = [e for e in edges if (e[0], e[1]) not in skip_edges]

    roads = []
    ends = {}  # road id -> (from junction key, to junction key)
    for a, b, street, wide in edges:
        for src, dst in ((a, b), (b, a)):
            ax, ay = src[0] * spacing, src[1] * spacing
            bx, by = dst[0] * spacing, dst[1] * spacing
            dx, dy = bx - ax, by - ay
            n = math.hypot(dx, dy)
            ux, uy = dx / n, dy / n
            nx, ny = right_normal(dx, dy)
            nl = 2 if wide else 1
            off = nl * LANE_W / 2.0
            p0 = [ax + ux * GAP + nx * off, ay + uy * GAP + ny * off]
            p1 = [bx - ux * GAP + nx * off, by - uy * GAP + ny * off]
            heading = {(1, 0): "e", (-1, 0): "w", (0, 1): "n", (0, -1): "s"}[(round(ux), round(uy))]
            slug = street.split()[0].lower()
            rid = f"{slug}-{heading}-{min(src[0], dst[0]) if heading in 'ew' else min(src[1], dst[1])}"
            roads.append({
                "id": rid,
                "street": street,
                "centerline": [[round(p0[0], 6), round(p0[1], 6)], [round(p1[0], 6), round(p1[1], 6)]],
                "lanes": [{"width": LANE_W} for _ in range(nl)],
            })
            ends[rid] = (src, dst)

    roads.sort(key=lambda r: r["id"])
    for r_in in roads:
        _, j = ends[r_in["id"]]
        outs = [r for r in roads if ends[r["id"]][0] == j]
        # no U-turns inside junctions unless it is a dead end
        non_u = [r for r in outs if ends[r["id"]][1] != ends[r_in["id"]][0]]
        for r_out in (non_u or outs):
            junctions[j]["connections"].append({
                "from_road": r_in["id"], "from_end": "end",
                "to_road": r_out["id"], "to_end": "start",
            })

    streets = sorted(set(row_names[:rows]) | set(col_names[:cols]))
    doc = {
        "schema": "sdnloop-map/1",
        "id": map_id,
        "streets": streets,
        "roads": roads,
        "junctions": [junctions[key] for key in sorted(junctions, key=lambda kk: int(jid[kk][1:]))],
        "landmarks": [{"name": n, "anchor": a} for n, a in landmarks],
    }
    if lights:
        doc["lights"] = [dict(l) for l in lights]
    if signs:
        doc["signs"] = [dict(s) for s in signs]
    return doc


def town_a():
    s = 120.0
    # anchors sit 6 m beyond the outer lane edge of the named road
    return grid_town(
        "townA", 4, 3, s,
        row_names=["1st Street", "Main Avenue", "3rd Street"],
        col_names=["Oak Road", "Elm Road", "Pine Road", "Cedar Road"],
        wide_rows=(1,),
        landmarks=[
            # Main Avenue eastbound between Pine and Cedar, south side
            ("Shell", [300.0, s - 7.0 - 6.0]),
            # Oak Road northbound between 1st and Main (right side is east)
            ("KFC", [0.0 + 3.5 + 6.0, 60.0]),
            # 3rd Street westbound between Elm and Pine (right side is north)
            ("IKEA", [180.0, 2 * s + 3.5 + 6.0]),
            # 1st Street eastbound between Oak and Elm (right side is south)
            ("Starbucks", [60.0, -3.5 - 6.0]),
            # Cedar Road southbound between Main and 3rd (right side is west)
            ("Hospital", [360.0 - 3.5 - 6.0, 180.0]),
            # Pine Road northbound between 1st and Main (right side is east)
            ("Library", [240.0 + 3.5 + 6.0, 60.0]),
        ],
        lights=[
            {"id": "L1", "road": "main-e-0", "green_s": 15.0, "red_s": 10.0, "offset_s": 0.0},
            {"id": "L2", "road": "main-w-1", "green_s": 15.0, "red_s": 10.0, "offset_s": 0.0},
            {"id": "L3", "road": "elm-n-0", "green_s": 10.0, "red_s": 15.0, "offset_s": 15.0},
            {"id": "L4", "road": "elm-s-1", "green_s": 10.0, "red_s": 15.0, "offset_s": 15.0},
        ],
        signs=[
            {"name": "speed limit sign", "state": "30 km/h", "road": "1st-e-1", "s": 40.0},
            {"name": "stop sign", "state": "stop", "road": "3rd-w-0", "s": 90.0},
        ],
    )


def town_b():
    s = 100.0
    return grid_town(
        "townB", 3, 2, s,
        row_names=["South Street", "North Street"],
        col_names=["West Lane", "Mill Lane", "East Lane"],
        landmarks=[
            ("Shell", [150.0, s + 1.75 + 6.0]),   # North Street westbound
            ("KFC", [200.0 + 1.75 + 6.0, 50.0]),  # East Lane northbound
            ("Bakery", [50.0, -1.75 - 6.0]),      # South Street eastbound
        ],
    )


def grid_2x2():
    # one-way counter-clockwise ring
    pts = {"J1": (0.0, 0.0), "J2": (100.0, 0.0), "J3": (100.0, 100.0), "J4": (0.0, 100.0)}
    ring = [("r1", "J1", "J2", "South Road", 2), ("r2", "J2", "J3", "East Road", 1),
            ("r3", "J3", "J4", "North Road", 1), ("r4", "J4", "J1", "West Road", 3)]
    roads = []
    for rid, a, b, street, nl in ring:
        (ax, ay), (bx, by) = pts[a], pts[b]
        dx, dy = bx - ax, by - ay
        n = math.hypot(dx, dy)
        ux, uy = dx / n, dy / n
        roads.append({
            "id": rid, "street": street,
            "centerline": [[ax + ux * 10, ay + uy * 10], [bx - ux * 10, by - uy * 10]],
            "lanes": [{"width": LANE_W} for _ in range(nl)],
        })
    junctions = []
    for i, (rid, a, b, _, _) in enumerate(ring):
        nxt = ring[(i + 1) % 4][0]
        junctions.append({"id": b, "position": list(pts[b]), "connections": [
            {"from_road": rid, "from_end": "end", "to_road": nxt, "to_end": "start"}]})
    junctions.sort(key=lambda j: j["id"])
    return {
        "schema": "sdnloop-map/1", "id": "grid2x2",
        "streets": sorted({r[3] for r in ring}),
        "roads": roads, "junctions": junctions,
        "landmarks": [{"name": "Cafe", "anchor": [60.0, -8.0]},
                      {"name": "Library", "anchor": [108.0, 50.0]}],
    }


def arc(cx, cy, r, a0, a1, step_deg=2.0):
    n = max(1, int(round(abs(math.degrees(a1 - a0)) / step_deg)))
    return [[cx + r * math.cos(a0 + (a1 - a0) * k / n), cy + r * math.sin(a0 + (a1 - a0) * k / n)]
            for k in range(n + 1)]


def track(radius, straight):
    # stadium loop driven counter-clockwise, split into two roads
    r = radius
    t1 = [[1.0, -r]] + arc(straight, 0.0, r, -math.pi / 2, math.pi / 2)
    t1.append([straight - 1.0, r])
    t2 = [[straight - 2.0, r]] + arc(0.0, 0.0, r, math.pi / 2, 3 * math.pi / 2)
    clean = lambda pts: [[round(x, 9), round(y, 9)] for x, y in pts]
    return {
        "schema": "sdnloop-map/1", "id": f"track-r{int(r)}",
        "streets": ["Ring"],
        "roads": [
            {"id": "t1", "street": "Ring", "centerline": clean(t1), "lanes": [{"width": LANE_W}, {"width": LANE_W}]},
            {"id": "t2", "street": "Ring", "centerline": clean(t2), "lanes": [{"width": LANE_W}, {"width": LANE_W}]},
        ],
        "junctions": [
            {"id": "JE", "connections": [{"from_road": "t1", "from_end": "end", "to_road": "t2", "to_end": "start"}]},
            {"id": "JW", "connections": [{"from_road": "t2", "from_end": "end", "to_road": "t1", "to_end": "start"}]},
        ],
        "landmarks": [{"name": "Pit", "anchor": [50.0, -r - 8.0]}],
    }


def straight():
    return {
        "schema": "sdnloop-map/1", "id": "straight",
        "streets": ["Long Road"],
        "roads": [
            {"id": "east", "street": "Long Road", "centerline": [[0.0, 0.0], [600.0, 0.0]],
             "lanes": [{"width": LANE_W}, {"width": LANE_W}, {"width": LANE_W}]},
            {"id": "west", "street": "Long Road", "centerline": [[600.0, 30.0], [0.0, 30.0]],
             "lanes": [{"width": LANE_W}, {"width": LANE_W}]},
        ],
        "junctions": [
            {"id": "JE", "connections": [{"from_road": "east", "from_end": "end", "to_road": "west", "to_end": "start"}]},
            {"id": "JW", "connections": [{"from_road": "west", "from_end": "end", "to_road": "east", "to_end": "start"}]},
        ],
        "landmarks": [{"name": "Depot", "anchor": [550.0, -10.0]}],
        "signs": [{"name": "speed limit sign", "state": "50 km/h", "road": "east", "s": 300.0}],
    }


def main():
    os.makedirs(OUT, exist_ok=True)
    for name, doc in [("townA", town_a()), ("townB", town_b()), ("grid2x2", grid_2x2()),
                      ("track", track(20.0, 100.0)), ("straight", straight())]:
        with open(os.path.join(OUT, f"{name}.json"), "w") as f:
            json.dump(doc, f, indent=1)
            f.write("\n")
        print(name, len(doc["roads"]), "roads", len(doc["junctions"]), "junctions")


if __name__ == "__main__":
    main()
