"""Writes the verbalizer golden fixtures from an independent Python rendering."""

import itertools
import json
import random
import sys

FAR = "I am far from the end of the road. I don't need to make a decision for turning now."
NEAR = "I am near the end of the road. I don't need to make a decision for turning now."
END = ("I am at the end of the road, I need to stop if there is a red light, "
       "or make a decision to turn left, turn right, or go straight now.")
AFFORD = {
    (False, False): "I'm not able to change lane.",
    (False, True): "I'm only able to change to the right lane.",
    (True, False): "I'm only able to change to the left lane.",
    (True, True): "I'm able to change to both right and left lane.",
}


def dist(d):
    s = "%.1f" % d
    return s[:-2] if s.endswith(".0") else s


def render(o):
    d = o["distance_to_end"]
    out = [FAR if d > 10 else NEAR if d > 5 else END]
    out.append("I'm on the %d lane from the left of the road." % o["lane"])
    out.append(AFFORD[(o["can_switch_left"], o["can_switch_right"])])
    for f in o["front_objects"]:
        out.append("There is a obstacle %s in front of me, the distance is %s." % (f["kind"], dist(f["distance"])))
    for s in o["signs"]:
        out.append("There is a %s that is %s meters from me, showing %s." % (s["name"], dist(s["distance"]), s["state"]))
    out.append("It's %s." % o["weather"])
    return " ".join(out)


def main(path):
    rng = random.Random(20240611)
    weathers = ["clear", "rain", "fog", "night-clear", "night-rain"]
    cases = []
    # Bucket boundaries and affordance variants first.
    for d, (l, r) in zip([40.0, 10.5, 10.0, 7.0, 5.0, 3.0, 0.0, 12.0],
                         itertools.cycle([(False, False), (False, True), (True, False), (True, True)])):
        lanes = 1 + int(l)
        cases.append(dict(distance_to_end=d, lane=lanes, can_switch_left=l, can_switch_right=r,
                          front_objects=[], signs=[], weather="clear"))
    cases.append(dict(distance_to_end=30.0, lane=2, can_switch_left=True, can_switch_right=False,
                      front_objects=[dict(kind="vehicle", distance=8.0)], signs=[], weather="clear"))
    cases.append(dict(distance_to_end=30.0, lane=1, can_switch_left=False, can_switch_right=True,
                      front_objects=[], signs=[dict(name="traffic light", state="red", distance=10.0)],
                      weather="clear"))
    for w in weathers:
        cases.append(dict(distance_to_end=25.0, lane=1, can_switch_left=False, can_switch_right=False,
                          front_objects=[], signs=[], weather=w))
    kinds = ["vehicle", "pedestrian", "traffic sign", "cone"]
    signs = [("traffic light", "red"), ("traffic light", "green"), ("speed limit sign", "30"),
             ("stop sign", "stop")]
    while len(cases) < 25:
        n = rng.randint(1, 3)
        cases.append(dict(
            distance_to_end=round(rng.uniform(0, 80), 2),
            lane=n,
            can_switch_left=n > 1,
            can_switch_right=rng.random() < 0.5,
            front_objects=[dict(kind=rng.choice(kinds), distance=round(rng.uniform(0, 50), 2))
                           for _ in range(rng.randint(0, 2))],
            signs=[dict(name=a, state=b, distance=round(rng.uniform(0, 60), 2))
                   for a, b in rng.sample(signs, rng.randint(0, 2))],
            weather=rng.choice(weathers),
        ))
    doc = {"schema": "sdnloop-goldens/1",
           "cases": [{"observation": c, "expected": render(c)} for c in cases]}
    with open(path, "w") as f:
        json.dump(doc, f, indent=1)
        f.write("\n")


if __name__ == "__main__":
    main(sys.argv[1])
