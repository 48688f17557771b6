"""Exercise the tstweak extension module end to end.

Build it first, e.g. `pip install maturin && maturin develop -m crates/python/Cargo.toml`.
"""

import math
import os
import random
import tempfile

import tstweak


def planted(n, length=40, width=10, seed=0):
    rng = random.Random(seed)
    labels, rows = [], []
    for i in range(n):
        sign = 1.0 if i % 2 == 0 else -1.0
        row = [rng.gauss(0.0, 0.5) for _ in range(length)]
        start = rng.randrange(length - width + 1)
        for k in range(width):
            row[start + k] += sign * 3.0 * (0.5 - 0.5 * math.cos(2 * math.pi * (k + 0.5) / width))
        labels.append("1" if sign > 0 else "-1")
        rows.append(row)
    return labels, rows


def main():
    assert tstweak.euclidean_distance([0.0, 0.0], [3.0, 4.0]) == 5.0
    assert tstweak.subsequence_distance([1.0, 2.0], [5.0, 1.0, 2.0, 7.0]) == (0.0, 1)
    assert tstweak.compactness([1.0, 2.0, 3.0, 4.0], [1.0, 2.5, 3.0, 4.0]) == 0.25

    labels, rows = planted(40)
    forest = tstweak.ShapeletForest.train(labels, rows, n_trees=15, shapelets_per_node=15, seed=3)
    assert forest.labels == ["-1", "1"]
    assert forest.n_trees == 15
    accuracy = sum(forest.predict(r) == l for l, r in zip(labels, rows)) / len(rows)
    print("training accuracy", accuracy)
    assert accuracy == 1.0
    assert forest.extract_paths("1"), "expected paths ending in '1'"

    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "model.json")
        forest.save(path)
        again = tstweak.ShapeletForest.load(path)
        assert again.to_json() == forest.to_json()

        data = os.path.join(tmp, "toy.csv")
        with open(data, "w") as fh:
            fh.write("1,0.5,0.25\n-1\t1\t2\n")
        try:
            tstweak.parse_ucr(data)
        except ValueError as err:
            assert ":2:" in str(err), err
        else:
            raise AssertionError("mixed delimiters should not parse")

    successes = 0
    for label, row in zip(labels, rows):
        if label != "-1":
            continue
        for method in ("rt", "irt"):
            r = tstweak.tweak(forest, row, "1", method=method)
            if r["success"]:
                successes += 1
                assert forest.predict(r["transformed"]) == "1"
                assert abs(r["cost"] - tstweak.euclidean_distance(row, r["transformed"])) < 1e-9
    r = tstweak.tweak(forest, rows[1], "1", method="nn", training=(labels, rows))
    assert tstweak.compactness(rows[1], r["transformed"]) == 1.0
    print("successful tweaks", successes)
    assert successes > 0

    try:
        tstweak.tweak(forest, rows[0], "1")
    except ValueError as err:
        print("already desired:", err)
    else:
        raise AssertionError("tweaking toward the current label should raise")
    print("ok")


if __name__ == "__main__":
    main()
