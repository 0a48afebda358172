"""End-to-end checks of the morse command-line tool.

usage: cli_test.py <morse binary> <schema> <data dir>
"""
import json
import os
import stat
import subprocess
import sys
import tempfile
import unittest

import jsonschema

MORSE, SCHEMA, DATA = sys.argv[1:4]


def run(*args, check=None):
    proc = subprocess.run([MORSE, *args], capture_output=True, text=True)
    if check is not None and proc.returncode != check:
        raise AssertionError(f"{args}: exit {proc.returncode}\n{proc.stderr}")
    return proc


def report(*args, check=0):
    return json.loads(run(*args, "--quiet", check=check).stdout)


def without(rep, *keys):
    rep = json.loads(json.dumps(rep))
    rep.pop("timestamp", None)
    for k in keys:
        section, field = k.split(".")
        rep[section].pop(field, None)
    return json.dumps(rep, indent=2)


class Cli(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        with open(SCHEMA) as f:
            cls.schema = json.load(f)

    def valid(self, rep):
        jsonschema.validate(rep, self.schema)

    def test_run_is_schema_valid_and_deterministic(self):
        first = run("run", "double_well_circle", "--seed", "7", check=0)
        second = run("run", "double_well_circle", "--seed", "7", "--quiet", check=0)
        a, b = json.loads(first.stdout), json.loads(second.stdout)
        self.valid(a)
        self.assertIsNotNone(a["timestamp"])
        self.assertEqual(without(a), without(b))
        self.assertIn("betti vs oracle", first.stderr)
        self.assertEqual(a["complex"]["betti"], [1, 1])
        self.assertEqual(a["verdict"]["status"], "pass")
        for section in ("stokes", "leibniz", "cup"):
            for check in a["identities"][section]:
                self.assertGreater(check["tolerance"], 0)

    def test_stages(self):
        crit = report("critical", "circle_cos")
        self.valid(crit)
        self.assertEqual(crit["critical"]["counts_by_index"], [1, 1])
        self.assertIsNone(crit["instantons"])
        inst = report("instantons", "circle_cos")
        self.assertEqual(len(inst["instantons"]["items"]), 2)
        self.assertIsNone(inst["complex"])
        coh = report("cohomology", "circle_cos")
        self.valid(coh)
        self.assertEqual(coh["complex"]["betti"], [1, 1])
        self.assertIsNone(coh["identities"])

    def test_check_selection(self):
        rep = report("run", "round_sphere_height", "--check", "cup")
        self.valid(rep)
        ids = rep["identities"]
        self.assertTrue(ids["cup"])
        self.assertIsNone(ids["stokes"])
        self.assertIsNone(ids["leibniz"])
        self.assertIsNone(ids["delta2"])
        self.assertIsNone(rep["detection"])

    def test_ascending_field_is_rejected(self):
        proc = run("run", os.path.join(DATA, "circle_ascent.json"), "--quiet", check=2)
        rep = json.loads(proc.stdout)
        self.valid(rep)
        self.assertEqual(rep["rejection"]["stage"], "check_lyapunov")
        self.assertEqual(rep["verdict"]["status"], "rejected")

    def test_bad_input(self):
        run("run", "no_such_scenario", "--quiet", check=2)
        run("run", "circle_cos", "--tol-verify", "0", check=2)
        run("verify", "circle_cos", "--check", "bogus", check=2)

    def test_emit_and_reload(self):
        with tempfile.TemporaryDirectory() as tmp:
            out = run("scenarios", tmp, check=0).stdout.split()
            self.assertEqual(len(out), 5)
            path = os.path.join(tmp, "circle_cos.json")
            a = report("run", "circle_cos", "--seed", "3")
            b = report("run", path, "--seed", "3")
            self.assertEqual(without(a, "config.scenario"), without(b, "config.scenario"))

            locked = os.path.join(tmp, "locked")
            os.mkdir(locked)
            os.chmod(locked, stat.S_IRUSR | stat.S_IXUSR)
            try:
                if os.geteuid() != 0:
                    run("scenarios", os.path.join(locked, "sub"), check=3)
            finally:
                os.chmod(locked, stat.S_IRWXU)
            blocker = os.path.join(tmp, "plain_file")
            open(blocker, "w").close()
            run("scenarios", os.path.join(blocker, "sub"), check=3)


if __name__ == "__main__":
    unittest.main(argv=sys.argv[:1], verbosity=2)
