"""
Various tests for classes in helpers
"""
import json
import os
import shutil
import tempfile
import unittest

import numpy as np

from pymlt.core.errors import ParseError
from pymlt.core.helpers import (FileDict, StagedFile, config_hash, dumps_json, iteration_streams,
                                load_environmental_variable_1_0, named_stream, parallel_map,
                                read_json, staging_area, write_json)
from tests import set_env


class TestStagedFile(unittest.TestCase):
    """Various tests for StagedFile class."""

    def setUp(self):
        self.test_dir = tempfile.mkdtemp()

    def test_StagedFile_digest(self):
        """ Tests if digest moves the file, creating the directory """
        src = os.path.join(self.test_dir, "foo")
        dest = os.path.join(self.test_dir, "out", "foo")
        with open(src, "w") as f:
            f.write("a test file")
        staged = StagedFile(src, dest)
        self.assertEqual(repr(staged), src)
        staged.digest()
        self.assertFalse(os.path.exists(src))
        self.assertTrue(os.path.isfile(dest))
        self.assertEqual(repr(staged), dest)

    def test_StagedFile_str(self):
        """StagedFile __str__ works and is useful"""
        self.assertEqual(str(StagedFile("/foo/bar", "/foo/lar")), "/foo/bar -- moved --> /foo/lar")
        self.assertEqual(StagedFile("/foo/bar", "/foo/lar"), StagedFile("/foo/bar", "/foo/lar"))

    def test_FileDict(self):
        """FileDict only holds StagedFile values"""
        files = FileDict(a=StagedFile("/x/a", "/y/a"))
        files["b"] = StagedFile("/x/b", "/y/b.json")
        self.assertEqual(len(files), 2)
        self.assertEqual(files.destinations(), ["a", "b.json"])
        with self.assertRaises(TypeError):
            files["c"] = "/x/c"
        del files["a"]
        self.assertEqual(list(files), ["b"])

    def tearDown(self):
        shutil.rmtree(self.test_dir)


class TestStagingArea(unittest.TestCase):

    def setUp(self):
        self.test_dir = tempfile.mkdtemp()
        self.out_dir = os.path.join(self.test_dir, "results")

    def test_staging_area_publishes(self):
        """Every staged file reaches the output directory"""
        with staging_area(self.out_dir) as area:
            write_json(area.path("a.json"), {"x": 1})
            write_json(area.path("b.json"), {"y": 2})
            self.assertEqual(os.listdir(self.out_dir), [os.path.basename(area.staging_dir)])
        self.assertEqual(sorted(os.listdir(self.out_dir)), ["a.json", "b.json"])
        self.assertEqual(read_json(os.path.join(self.out_dir, "b.json")), {"y": 2})

    def test_staging_area_discards(self):
        """An exception leaves nothing behind"""
        with self.assertRaises(RuntimeError):
            with staging_area(self.out_dir) as area:
                write_json(area.path("a.json"), {"x": 1})
                raise RuntimeError("stop")
        self.assertEqual(os.listdir(self.out_dir), [])

    def tearDown(self):
        shutil.rmtree(self.test_dir)


class TestStreams(unittest.TestCase):

    def test_named_stream(self):
        """Same seed and keys give the same numbers, other keys do not"""
        self.assertEqual(named_stream(7, "folds").random(), named_stream(7, "folds").random())
        self.assertNotEqual(named_stream(7, "folds").random(), named_stream(7, "negatives").random())
        self.assertNotEqual(named_stream(7, "restart", 0).random(), named_stream(7, "restart", 1).random())
        self.assertNotEqual(named_stream(7, "folds").random(), named_stream(8, "folds").random())

    def test_iteration_streams(self):
        first = [stream.random() for stream in iteration_streams(np.random.default_rng(3), 5)]
        second = [stream.random() for stream in iteration_streams(3, 5)]
        self.assertEqual(first, second)
        self.assertEqual(len(set(first)), 5)

    def test_parallel_map(self):
        """Threads keep the order of the items"""
        self.assertEqual(parallel_map(lambda x: x * x, range(20), threads=4), [x * x for x in range(20)])
        self.assertEqual(parallel_map(str, [], threads=4), [])


class TestJson(unittest.TestCase):

    def test_dumps_json(self):
        """Numpy values are converted, keys sorted"""
        text = dumps_json({"b": np.arange(2), "a": np.float64(0.5), "c": np.bool_(False)})
        self.assertTrue(text.endswith("\n"))
        self.assertLess(text.index('"a"'), text.index('"b"'))
        self.assertEqual(json.loads(text), {"a": 0.5, "b": [0, 1], "c": False})
        self.assertRaises(TypeError, dumps_json, {"x": object()})

    def test_read_json_malformed(self):
        """Malformed JSON is a parse error naming the line"""
        test_dir = tempfile.mkdtemp()
        try:
            path = os.path.join(test_dir, "broken.json")
            with open(path, "w") as json_file:
                json_file.write("{\n  \"a\": 1,\n}\n")
            with self.assertRaises(ParseError) as raised:
                read_json(path)
            self.assertEqual(raised.exception.line_number, 3)
        finally:
            shutil.rmtree(test_dir)

    def test_config_hash(self):
        """Key order does not matter, values do"""
        self.assertEqual(config_hash({"a": 1, "b": [1, 2]}), config_hash({"b": [1, 2], "a": 1}))
        self.assertNotEqual(config_hash({"a": 1}), config_hash({"a": 2}))

    def test_environment_flag(self):
        with set_env(PYMLT_TEST_FLAG="1"):
            self.assertTrue(load_environmental_variable_1_0("PYMLT_TEST_FLAG"))
        with set_env(PYMLT_TEST_FLAG="yes"):
            self.assertFalse(load_environmental_variable_1_0("PYMLT_TEST_FLAG"))
        self.assertFalse(load_environmental_variable_1_0("PYMLT_TEST_FLAG"))


if __name__ == "__main__":
    unittest.main()
