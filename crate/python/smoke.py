"""Smoke test for the foodtray extension module.

Build and install first:
    maturin develop -m crates/python/Cargo.toml --features extension-module
"""

import sys
import tempfile
from pathlib import Path

import foodtray


def main():
    v = foodtray.normalize([3.0, 4.0])
    assert abs(v[0] - 0.6) < 1e-12 and abs(v[1] - 0.8) < 1e-12

    hist = foodtray.histogram_descriptor(2, 1, bytes([255, 0, 0, 0, 255, 0]))
    assert len(hist) == 512
    assert sum(hist) == 2 and hist[448] == 1 and hist[56] == 1

    windows = foodtray.generate_windows(0, 0, 100, 60)
    assert windows[0] == (0, 0, 30, 30)

    m = foodtray.set_metrics([(["a", "b"], ["a"]), ([], ["c"])])
    assert abs(m["precision"] - 0.5) < 1e-12 and abs(m["recall"] - 0.5) < 1e-12

    with tempfile.TemporaryDirectory() as tmp:
        out = Path(tmp)
        n = foodtray.generate_synthetic(str(out), seed=3, tray_count=5)
        assert n == 5
        store = foodtray.FeatureStore.load(str(out / "features.tsv"))
        manifest = sorted(out.glob("*.json"))[0]
        meal = foodtray.Meal.load(str(manifest), store)
        classes = meal.class_ids()
        assert len(meal) == len(classes) == 40

        template = store.get(f"{meal.meal_id}/{classes[0]}/t0")
        cls, score = meal.classify_single(template)
        assert cls == classes[0] and score > 0.999
        assert classes[0] in meal.classify_multi(template, 0.999)
        assert abs(meal.class_similarity(classes[0], template) - score) < 1e-12
        assert meal.category_of(classes[0]) == "cat0"
        assert meal.nutrition_of(classes[0])["energy_kcal"] > 0

        tray = sorted((out / "trays").glob("*.json"))[0]
        for method in ("single", "hierarchical"):
            result = foodtray.recognize_tray(str(tray), meal, store, method=method)
            assert result["predicted_items"], result
            assert "nutrition" in result
        result = foodtray.recognize_tray(str(tray), meal, store, method="multi", theta=0.8)
        try:
            foodtray.recognize_tray(str(tray), meal, store, method="multi")
        except ValueError:
            pass
        else:
            raise AssertionError("multi without theta should fail")

    try:
        foodtray.FeatureStore.load("/nonexistent/features.tsv")
    except IOError:
        pass
    else:
        raise AssertionError("missing store should raise IOError")

    print(f"foodtray {foodtray.__version__}: smoke OK")
    return 0


if __name__ == "__main__":
    sys.exit(main())
