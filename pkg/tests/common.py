import ast
import inspect
from ast import NodeTransformer
from contextlib import contextmanager
from pathlib import Path
from textwrap import dedent

import numpy as np
import pytest
import yaml
from _pytest.assertion.rewrite import AssertionRewriter
from giving import given

GOLDEN = Path(__file__).parent / "golden"


class AssertTransformer(NodeTransformer):
    def visit_FunctionDef(self, node):
        newfns = []
        for i, stmt in enumerate(node.body):
            if not isinstance(stmt, ast.Assert):
                raise Exception(
                    "@one_test_per_assert requires all statements to be asserts"
                )
            else:
                newfns.append(
                    ast.FunctionDef(
                        name=f"{node.name}_assert{i + 1}",
                        args=node.args,
                        body=[stmt],
                        decorator_list=node.decorator_list,
                        returns=node.returns,
                    )
                )
        return ast.Module(body=newfns, type_ignores=[])


def one_test_per_assert(fn):
    src = dedent(inspect.getsource(fn))
    filename = inspect.getsourcefile(fn)
    tree = ast.parse(src, filename)
    tree = tree.body[0]
    assert isinstance(tree, ast.FunctionDef)
    tree.decorator_list = []
    new_tree = AssertTransformer().visit(tree)
    ast.fix_missing_locations(new_tree)
    _, lineno = inspect.getsourcelines(fn)
    ast.increment_lineno(new_tree, lineno - 1)
    # Use pytest's assertion rewriter for nicer error messages
    AssertionRewriter(filename, None, None).run(new_tree)
    new_fn = compile(new_tree, filename, "exec")
    glb = fn.__globals__
    exec(new_fn, glb, glb)
    if hasattr(fn, "pytestmark"):
        for name, value in glb.items():
            if name.startswith(fn.__name__):
                value.pytestmark = fn.pytestmark
    return None


@contextmanager
def events(name, key=None):
    """Collect the data of every ``give(event=name, ...)`` in the block.

    With ``key``, only that field of each event is collected.
    """
    with given() as gv:
        stream = gv.where(event=name)
        if key is not None:
            stream = stream[key]
        yield stream.accum()


def relative_l2(a, b):
    """``‖a - b‖/‖b‖`` over any number of arrays."""
    num = sum(np.sum(np.abs(x - y) ** 2) for x, y in zip(a, b))
    den = sum(np.sum(np.abs(y) ** 2) for y in b)
    return float(np.sqrt(num / den))


def load_golden(name):
    with open(GOLDEN / f"{name}.yaml", encoding="utf-8") as f:
        return yaml.safe_load(f)


def check_golden(name, actual, rel=1e-9):
    """Compare ``actual`` to the golden file ``name``, writing it if absent.

    ``actual`` is a mapping of floats or of lists of floats.
    """
    path = GOLDEN / f"{name}.yaml"
    if not path.exists():
        path.parent.mkdir(exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            yaml.safe_dump(actual, f)
        pytest.skip(f"captured golden file {path.name}")
    expected = load_golden(name)
    assert set(expected) == set(actual)
    for key, value in expected.items():
        got = np.asarray(actual[key], dtype=float)
        want = np.asarray(value, dtype=float)
        assert got == pytest.approx(want, rel=rel), key
