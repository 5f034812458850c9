"""Runs the CLI on a small configuration and validates its artifacts.

Every report JSON must satisfy schemas/eval_report.schema.json and every SVG
must parse as XML.
"""
import json
import pathlib
import subprocess
import sys
import tempfile
import xml.etree.ElementTree as ET

import jsonschema

CONFIG = {
    "dataset": {"train_scenes": 16, "test_scenes": 8},
    "train": {"epochs": 2, "lr_drop_epoch": 1, "finetune_epochs": 1},
    "protocol": {"exemplars_per_class": 1, "exemplar_budget": 6, "tau_list": [0.8, 1.3]},
}


def run(cli, out, *args):
    subprocess.run([cli, "--config", str(out / "config.json"), "--out", str(out), "--quiet", *args], check=True)


def main():
    cli, schema_path = sys.argv[1], sys.argv[2]
    schema = json.loads(pathlib.Path(schema_path).read_text())
    jsonschema.Draft202012Validator.check_schema(schema)
    validator = jsonschema.Draft202012Validator(schema)
    with tempfile.TemporaryDirectory() as tmp:
        out = pathlib.Path(tmp)
        (out / "config.json").write_text(json.dumps(CONFIG))
        run(cli, out, "benchmark")
        run(cli, out, "sweep", "--checkpoint", str(out / "checkpoint_task1.json"))
        run(cli, out, "report", "--input", str(out / "report_task0.json"), str(out / "report_task1.json"))

        reports = [json.loads(p.read_text()) for p in sorted(out.glob("report_task*.json"))]
        reports += json.loads((out / "sweep.json").read_text())
        assert len(reports) == 4, len(reports)
        for r in reports:
            validator.validate(r)
        assert reports[0]["map_prev"] is None

        svgs = sorted(out.glob("*.svg"))
        assert {p.name for p in svgs} >= {"tasks.svg", "sweep.svg", "pr_task0.svg", "pr_task1.svg"}, svgs
        for p in svgs:
            root = ET.parse(p).getroot()
            assert root.tag.endswith("svg"), p
    print(f"validated {len(reports)} reports and {len(svgs)} SVG files")


if __name__ == "__main__":
    main()
