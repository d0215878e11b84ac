"""End-to-end checks of the explab command line, including schema validation."""

import argparse
import json
import os
import re
import subprocess
import sys
import tempfile
import unittest
from pathlib import Path

import jsonschema

EXE = None
SCHEMA = None


def run(*args, env=None, check_code=0):
    full_env = dict(os.environ)
    if env:
        full_env.update(env)
    proc = subprocess.run([EXE, *map(str, args)], capture_output=True, text=True, env=full_env)
    if check_code is not None and proc.returncode != check_code:
        raise AssertionError(
            f"explab {' '.join(map(str, args))} exited {proc.returncode}, expected {check_code}\n"
            f"stdout: {proc.stdout}\nstderr: {proc.stderr}")
    return proc


def validate(doc, kind):
    schema = dict(SCHEMA)
    schema.pop("oneOf")
    schema["$ref"] = f"#/$defs/{kind}"
    jsonschema.Draft202012Validator(schema).validate(doc)
    jsonschema.Draft202012Validator(SCHEMA).validate(doc)


def load(path):
    return json.loads(Path(path).read_text())


def without_timestamp(text):
    return re.sub(r'"timestamp": "[^"]*"', '"timestamp": ""', text)


class CliTest(unittest.TestCase):
    def setUp(self):
        self._dir = tempfile.TemporaryDirectory()
        self.tmp = Path(self._dir.name)

    def tearDown(self):
        self._dir.cleanup()

    def write(self, name, text):
        path = self.tmp / name
        path.write_text(text)
        return path

    def synth(self, kind, *flags, features="f.csv", attribute="a.csv"):
        run("synth", kind, *flags, "--out-features", self.tmp / features, "--out-attribute", self.tmp / attribute)
        return self.tmp / features, self.tmp / attribute

    # usage

    def test_usage_errors_exit_1(self):
        self.assertEqual(run("--help").returncode, 0)
        self.assertEqual(run(check_code=None).returncode, 1)
        self.assertEqual(run("frobnicate", check_code=None).returncode, 1)
        self.assertEqual(run("metrics", "--bogus", check_code=None).returncode, 1)
        self.assertEqual(run("expressivity", "--features", self.tmp / "missing.csv", "--attribute",
                             self.tmp / "missing.csv", "--out", self.tmp / "o.json", check_code=None).returncode, 1)

    # synth

    def test_synth_sidecars(self):
        f, _ = self.synth("gaussian", "--rho", "0.9", "--n", "10000")
        side = load(str(f) + ".json")
        validate(side, "synth")
        self.assertAlmostEqual(side["true_mi_nats"], 0.8304, places=4)
        self.assertEqual(len(f.read_text().splitlines()), 10000)

        f, _ = self.synth("gaussian", "--rho", "0", "--n", "10")
        self.assertEqual(load(str(f) + ".json")["true_mi_nats"], 0.0)

        f, _ = self.synth("embedded", "--snr", "2", "--dim", "4", "--attribute-type", "binary", "--n", "20")
        side = load(str(f) + ".json")
        validate(side, "synth")
        self.assertIsNone(side["true_mi_nats"])
        self.assertFalse(side["true_mi_known"])

        f, _ = self.synth("independent", "--dim", "3", "--n", "5", features="x.fam1", attribute="y.bin")
        self.assertEqual(f.read_bytes()[:4], b"FAM1")
        self.assertEqual(load(str(f) + ".json")["true_mi_nats"], 0.0)

    def test_synth_invalid_spec_exits_1(self):
        for flags in (["gaussian", "--rho", "1.0"], ["gaussian", "--rho", "-2"], ["embedded", "--snr", "0"],
                      ["embedded", "--snr", "-1"]):
            proc = run("synth", *flags, "--out-features", self.tmp / "f.csv", "--out-attribute",
                       self.tmp / "a.csv", check_code=None)
            self.assertEqual(proc.returncode, 1, flags)
            self.assertIn("error", proc.stderr)

    # expressivity

    def test_expressivity_independent_and_deterministic(self):
        f, a = self.synth("independent", "--dim", "64", "--n", "5000", "--seed", "3",
                          features="f.fam1", attribute="a.fam1")
        out1, out2 = self.tmp / "e1.json", self.tmp / "e2.json"
        run("expressivity", "--features", f, "--attribute", a, "--seeds", "3", "--out", out1)
        run("expressivity", "--features", f, "--attribute", a, "--seeds", "3", "--out", out2,
            env={"EXPLAB_THREADS": "2"})
        doc = load(out1)
        validate(doc, "expressivity")
        self.assertEqual(len(doc["per_seed"]), 3)
        self.assertGreaterEqual(doc["mean"], -0.05)
        self.assertLessEqual(doc["mean"], 0.05)
        self.assertEqual(doc["layer"], "f")
        self.assertEqual(doc["attribute"], "a")
        self.assertEqual(doc["manifest"]["config"]["lr"], 1e-3)
        self.assertEqual(doc["manifest"]["config"]["batch_size"], 100)
        self.assertEqual(doc["manifest"]["config"]["hidden_dims"], [256, 64])
        self.assertEqual(without_timestamp(out1.read_text()), without_timestamp(out2.read_text()))

    def test_expressivity_single_seed(self):
        f, a = self.synth("gaussian", "--rho", "0.6", "--n", "1000")
        out = self.tmp / "e.json"
        run("expressivity", "--features", f, "--attribute", a, "--seeds", "1", "--steps", "200",
            "--layer-name", "L3", "--attribute-name", "age", "--out", out)
        doc = load(out)
        validate(doc, "expressivity")
        self.assertEqual(len(doc["per_seed"]), 1)
        self.assertEqual(doc["std"], 0.0)
        self.assertEqual(doc["mean"], doc["per_seed"][0])
        self.assertEqual((doc["layer"], doc["attribute"]), ("L3", "age"))

    def test_expressivity_error_exit_codes(self):
        f = self.write("f.csv", "1,2\n3,4\n5,6\n")
        short = self.write("a.csv", "1\n2\n")
        proc = run("expressivity", "--features", f, "--attribute", short, "--out", self.tmp / "o.json",
                   check_code=None)
        self.assertEqual(proc.returncode, 1)
        ragged = self.write("r.csv", "1,2\n3\n")
        proc = run("expressivity", "--features", ragged, "--attribute", short, "--out", self.tmp / "o.json",
                   check_code=None)
        self.assertEqual(proc.returncode, 1)
        self.assertIn("line 2", proc.stderr)
        nan = self.write("n.csv", "1,2\nnan,4\n5,6\n")
        attr = self.write("a3.csv", "1\n2\n3\n")
        proc = run("expressivity", "--features", nan, "--attribute", attr, "--out", self.tmp / "o.json",
                   check_code=None)
        self.assertEqual(proc.returncode, 2, proc.stderr)

    # sweep

    def test_sweep_rising_snr(self):
        layers = []
        for i, snr in enumerate(["0.3", "1", "3"]):
            f, a = self.synth("embedded", "--snr", snr, "--dim", "8", "--n", "3000", "--seed", "5",
                              features=f"layer{i}.csv", attribute="attr.csv")
            layers.append(str(f))
        out, svg = self.tmp / "s.json", self.tmp / "s.svg"
        run("sweep", "--layers", ",".join(layers), "--attributes", a, "--seeds", "1", "--out", out, "--svg", svg)
        doc = load(out)
        validate(doc, "sweep")
        self.assertEqual(doc["layers"], ["layer0", "layer1", "layer2"])
        self.assertEqual(doc["attributes"], ["attr"])
        means = [c["mean"] for c in doc["cells"]]
        self.assertLess(means[0], means[1])
        self.assertLess(means[1], means[2])

        text = svg.read_text()
        lines = re.findall(r'<polyline class="mean"[^>]*points="([^"]*)"', text)
        self.assertEqual(len(lines), 1)
        ys = [float(p.split(",")[1]) for p in lines[0].split()]
        self.assertEqual(len(ys), 3)
        self.assertTrue(ys[0] > ys[1] > ys[2], ys)  # SVG y axis points down
        self.assertIn('class="band"', text)
        self.assertIn(">attr<", text)

    def test_sweep_single_cell_and_names(self):
        f, a = self.synth("gaussian", "--rho", "0.5", "--n", "600")
        out = self.tmp / "s.json"
        run("sweep", "--layers", f, "--layer-names", "final", "--attributes", a, "--attribute-names", "sex",
            "--seeds", "1", "--steps", "50", "--out", out)
        doc = load(out)
        validate(doc, "sweep")
        self.assertEqual(len(doc["cells"]), 1)
        self.assertEqual(doc["cells"][0]["layer"], "final")
        self.assertEqual(doc["cells"][0]["attribute"], "sex")
        proc = run("sweep", "--layers", f, "--layer-names", "a,b", "--attributes", a, "--seeds", "1",
                   "--out", out, check_code=None)
        self.assertEqual(proc.returncode, 1)

    def test_sweep_inconsistent_rows_names_layer(self):
        f, a = self.synth("gaussian", "--rho", "0.5", "--n", "100")
        g = self.write("odd.csv", "\n".join(["1"] * 99) + "\n")
        proc = run("sweep", "--layers", f"{f},{g}", "--attributes", a, "--seeds", "1", "--out",
                   self.tmp / "s.json", check_code=None)
        self.assertEqual(proc.returncode, 1)
        self.assertIn("odd", proc.stderr)

    # metrics

    def test_metrics_perfect_and_worked_example(self):
        s = self.write("s.csv", "0.9\n0.8\n0.4\n0.3\n")
        l = self.write("l.csv", "1\n1\n0\n0\n")
        out = self.tmp / "m.json"
        run("metrics", "--scores", s, "--labels", l, "--out", out, "--bootstrap", "200", "--curves-out",
            self.tmp / "curves")
        doc = load(out)
        validate(doc, "metrics")
        self.assertEqual(doc["auroc"]["point"], 1.0)
        self.assertEqual([doc["auroc"]["ci_low"], doc["auroc"]["ci_high"]], [1.0, 1.0])
        self.assertEqual((doc["n"], doc["n_pos"]), (4, 2))
        roc = (self.tmp / "curves" / "roc.csv").read_text().splitlines()
        self.assertEqual(roc[0], "fpr,tpr")
        self.assertEqual(roc[1], "0,0")
        self.assertIn("0,1", roc)
        self.assertEqual((self.tmp / "curves" / "pr.csv").read_text().splitlines()[0], "recall,precision")

        s2 = self.write("s2.csv", "score\n0.9\n0.8\n0.7\n0.6\n")
        l2 = self.write("l2.csv", "label\n1\n0\n1\n0\n")
        run("metrics", "--scores", s2, "--labels", l2, "--out", out, "--seed", "4")
        first = out.read_text()
        self.assertEqual(load(out)["auroc"]["point"], 0.75)
        run("metrics", "--scores", s2, "--labels", l2, "--out", out, "--seed", "4")
        self.assertEqual(without_timestamp(first), without_timestamp(out.read_text()))

    def test_metrics_input_errors(self):
        s = self.write("s.csv", "0.9\n0.8\n0.4\n")
        l = self.write("l.csv", "1\n0\n")
        proc = run("metrics", "--scores", s, "--labels", l, "--out", self.tmp / "m.json", check_code=None)
        self.assertEqual(proc.returncode, 1)
        ones = self.write("ones.csv", "1\n1\n1\n")
        proc = run("metrics", "--scores", s, "--labels", ones, "--out", self.tmp / "m.json", check_code=None)
        self.assertEqual(proc.returncode, 1)
        self.assertIn("negative", proc.stderr)

    # balance

    def test_balance(self):
        rows = ["id,split,label,group"]
        rows += [f"p{i},train,1,g{i}" for i in range(10)]
        rows += [f"n{i},train,0,g{i}" for i in range(30)]
        rows += [f"v{i},validation,{i % 2},h{i}" for i in range(8)]
        meta = self.write("meta.csv", "\n".join(rows) + "\n")
        out1, out2 = self.tmp / "b1.json", self.tmp / "b2.json"
        run("balance", "--metadata", meta, "--seed", "7", "--out", out1)
        run("balance", "--metadata", meta, "--seed", "7", "--out", out2)
        doc = load(out1)
        validate(doc, "balance")
        train = doc["splits"][0]
        self.assertEqual(train["split"], "train")
        self.assertEqual(train["counts_before"], {"positive": 10, "negative": 30})
        self.assertEqual(train["counts_after"], {"positive": 10, "negative": 10})
        self.assertEqual(len(train["selected_ids"]), 20)
        self.assertTrue(all(f"p{i}" in train["selected_ids"] for i in range(10)))
        self.assertEqual(doc["splits"][1]["counts_after"], {"positive": 4, "negative": 4})
        self.assertEqual(without_timestamp(out1.read_text()), without_timestamp(out2.read_text()))

    def test_balance_missing_class(self):
        meta = self.write("meta.csv", "id,split,label\na,train,1\nb,train,0\nc,test,0\nd,test,0\n")
        proc = run("balance", "--metadata", meta, "--seed", "1", "--out", self.tmp / "b.json", check_code=None)
        self.assertEqual(proc.returncode, 1)
        self.assertIn("test", proc.stderr)


def main():
    global EXE, SCHEMA
    parser = argparse.ArgumentParser()
    parser.add_argument("--exe", required=True)
    parser.add_argument("--schemas", required=True)
    args, rest = parser.parse_known_args()
    EXE = args.exe
    SCHEMA = json.loads((Path(args.schemas) / "explab-results.schema.json").read_text())
    jsonschema.Draft202012Validator.check_schema(SCHEMA)
    unittest.main(argv=[sys.argv[0], *rest], verbosity=2)


if __name__ == "__main__":
    main()
