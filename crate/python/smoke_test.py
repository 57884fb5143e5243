"""Exercises the hybrid_ids extension end to end on a small synthetic corpus.

Build and install first:
    cd crates/python && maturin build --release -o dist && pip install dist/*.whl
"""
import csv
import pathlib
import random
import tempfile

import hybrid_ids as hi


def load_flow(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    names = [c for c in rows[0] if c not in ("id", "label")]
    ids = [r["id"] for r in rows]
    x = [[float(r[c]) for c in names] for r in rows]
    y = [r["label"] for r in rows]
    return ids, x, y


def main():
    assert hi.hybrid_width(10, 4, 4, 6, 8, "h3") == 10 + 16 + 48
    assert hi.hybrid_width(10, 4, 4, 6, 8, "flow") == 10
    m = [[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]
    assert hi.flatten(m) == [1.0, 2.0, 3.0, 4.0, 5.0, 6.0]
    assert hi.reshape(hi.flatten(m), 2, 3) == m

    plan = hi.SelectionPlan((500, 8), (28, 4), seed=0)
    again = hi.SelectionPlan((500, 8), (28, 4), seed=0)
    assert plan.rows == again.rows and plan.cols == again.cols
    assert plan.cols == [1, 4, 5, 7]
    assert len(plan.rows) == 28 and plan.rows == sorted(plan.rows)

    with tempfile.TemporaryDirectory() as tmp:
        tmp = pathlib.Path(tmp)
        files = hi.generate_benchmark(str(tmp / "data"), total=3000, seed=0)
        host = hi.HostTensors.load(files["host_tensors"])
        ids, x, names = load_flow(files["flow_csv"])
        assert len(host) == len(ids)
        m_, n_, p_, q_ = host.dims
        assert len(host.event(0)) == m_ and len(host.message(0)[0]) == q_

        classes = sorted(set(names))
        benign = "BENIGN" if "BENIGN" in classes else classes[0]
        y = [classes.index(n) for n in names]

        order = list(range(len(y)))
        random.Random(0).shuffle(order)
        cut = len(order) * 7 // 10
        tr, te = order[:cut], order[cut:]
        xtr, ytr = [x[i] for i in tr], [y[i] for i in tr]
        xte, yte = [x[i] for i in te], [y[i] for i in te]

        pca = hi.Pca.fit(xtr, 4)
        assert len(pca.components) == 4
        ev = pca.explained_variance
        assert all(a >= b for a, b in zip(ev, ev[1:]))
        assert len(pca.transform(xte)[0]) == 4

        params = dict(rounds=20, max_depth=3, learning_rate=0.3, seed=0)
        flat = hi.GbdtModel.train(xtr, ytr, len(classes), **params)
        assert flat.n_classes == len(classes)
        hist = flat.loss_history
        assert all(b <= a + 1e-9 for a, b in zip(hist, hist[1:]))
        flat.save(str(tmp / "flat.gbt"))
        reloaded = hi.GbdtModel.load(str(tmp / "flat.gbt"))
        assert reloaded.predict(xte) == flat.predict(xte)
        probs = flat.predict_proba(xte[:5])
        assert all(abs(sum(r) - 1.0) < 1e-9 for r in probs)

        cascade = hi.Cascade.train(xtr, ytr, classes, benign, **params)
        assert cascade.benign_id == classes.index(benign)
        cascade.save(str(tmp / "cascade.cas"))
        assert hi.Cascade.load(str(tmp / "cascade.cas")).predict(xte) == cascade.predict(xte)

        flat_report = hi.evaluate(yte, flat.predict(xte), classes, benign)
        cas_report = hi.evaluate(yte, cascade.predict(xte), classes, benign)
        assert 0.0 <= flat_report.macro_f1 <= 1.0
        assert sum(map(sum, cas_report.confusion)) == len(yte)
        print(cas_report.text())

        cfg = tmp / "experiment.toml"
        cfg.write_text(
            "mode = \"flow-event-message\"\n"
            "event_select = [4, 4]\n"
            "message_select = [6, 8]\n"
            "rounds = 2\n"
            f"out_dir = \"{(tmp / 'out').as_posix()}\"\n"
            "[data]\n"
            f"flow_csv = \"{pathlib.Path(files['flow_csv']).as_posix()}\"\n"
            f"host_tensors = \"{pathlib.Path(files['host_tensors']).as_posix()}\"\n"
            f"label_map = \"{pathlib.Path(files['label_map']).as_posix()}\"\n"
            "[classifier.params]\n"
            "rounds = 20\n"
            "max_depth = 3\n"
        )
        summary = hi.run_experiment(str(cfg))
        assert summary["rounds"] == 2
        print(f"experiment mean macro F1 {summary['macro_f1']:.4f}")

        try:
            hi.SelectionPlan((4, 4), (5, 4))
        except ValueError:
            pass
        else:
            raise AssertionError("oversized selection target accepted")

    print("smoke test OK")


if __name__ == "__main__":
    main()
