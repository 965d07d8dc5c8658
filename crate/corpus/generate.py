#!/usr/bin/env python3
"""Generates the bug-bundle corpus.

Each bundle is one SLANG program made of unrelated library functions plus one
function with a seeded bug, and a JSON test suite. Expected values come from
the Python models below, never from the Rust interpreter. A test fails when
the buggy model and the fixed model disagree on its input.

Run from anywhere: python3 corpus/generate.py
"""

import json
import random
from pathlib import Path

SEED = 20241
OUT = Path(__file__).resolve().parent


def tdiv(a, b):
    q = abs(a) // abs(b)
    return q if (a >= 0) == (b >= 0) else -q


def tmod(a, b):
    return a - tdiv(a, b) * b


class Err(Exception):
    def __init__(self, kind):
        self.kind = kind


def at(arr, i):
    if i < 0 or i >= len(arr):
        raise Err("IndexOutOfBounds")
    return arr[i]


def div(a, b):
    if b == 0:
        raise Err("DivByZero")
    return tdiv(a, b)


# ---------------------------------------------------------------- library

LIBRARY = {}


def lib(name, text, model, gen):
    LIBRARY[name] = (text.strip("\n").split("\n"), model, gen)


def gcd(a, b):
    while b != 0:
        a, b = b, tmod(a, b)
    return a


lib("gcd", """
fn gcd(a, b)
  let t = 0
  while b != 0
    t = b
    b = a % b
    a = t
  end
  return a
end
""", gcd, lambda r: [r.randint(1, 500), r.randint(1, 500)])


def fact(n):
    out = 1
    for i in range(2, n + 1):
        out *= i
    return out


lib("fact", """
fn fact(n)
  let r = 1
  let i = 2
  while i <= n
    r = r * i
    i = i + 1
  end
  return r
end
""", fact, lambda r: [r.randint(0, 15)])


def fib(n):
    a, b = 0, 1
    for _ in range(n):
        a, b = b, a + b
    return a


lib("fib", """
fn fib(n)
  let a = 0
  let b = 1
  let t = 0
  let i = 0
  while i < n
    t = a + b
    a = b
    b = t
    i = i + 1
  end
  return a
end
""", fib, lambda r: [r.randint(0, 40)])


def is_prime(n):
    if n < 2:
        return False
    return all(n % d for d in range(2, int(n ** 0.5) + 1))


lib("is_prime", """
fn is_prime(n)
  if n < 2
    return false
  end
  let d = 2
  while d * d <= n
    if n % d == 0
      return false
    end
    d = d + 1
  end
  return true
end
""", is_prime, lambda r: [r.randint(-3, 400)])


lib("reverse", """
fn reverse(arr)
  let out = []
  let i = len(arr) - 1
  while i >= 0
    out = out + [arr[i]]
    i = i - 1
  end
  return out
end
""", lambda arr: arr[::-1], lambda r: [[r.randint(-9, 9) for _ in range(r.randint(0, 7))]])


def digit_sum(n):
    s = 0
    while n > 0:
        s += n % 10
        n //= 10
    return s


lib("digit_sum", """
fn digit_sum(n)
  let s = 0
  while n > 0
    s = s + n % 10
    n = n / 10
  end
  return s
end
""", digit_sum, lambda r: [r.randint(0, 99999)])


lib("power", """
fn power(b, e)
  let r = 1
  while e > 0
    r = r * b
    e = e - 1
  end
  return r
end
""", lambda b, e: b ** e, lambda r: [r.randint(-6, 6), r.randint(0, 8)])


def collatz(n):
    steps = 0
    while n != 1:
        n = n // 2 if n % 2 == 0 else 3 * n + 1
        steps += 1
    return steps


lib("collatz", """
fn collatz(n)
  let steps = 0
  while n != 1
    if n % 2 == 0
      n = n / 2
    else
      n = 3 * n + 1
    end
    steps = steps + 1
  end
  return steps
end
""", collatz, lambda r: [r.randint(1, 60)])


lib("clamp", """
fn clamp(x, lo, hi)
  if x < lo
    return lo
  end
  if x > hi
    return hi
  end
  return x
end
""", lambda x, lo, hi: lo if x < lo else hi if x > hi else x,
    lambda r: [r.randint(-50, 50), r.randint(-20, 0), r.randint(0, 20)])


lib("count_evens", """
fn count_evens(arr)
  let c = 0
  let i = 0
  while i < len(arr)
    if arr[i] % 2 == 0
      c = c + 1
    end
    i = i + 1
  end
  return c
end
""", lambda arr: sum(1 for x in arr if tmod(x, 2) == 0),
    lambda r: [[r.randint(-20, 20) for _ in range(r.randint(0, 8))]])


lib("contains", """
fn contains(arr, x)
  let i = 0
  while i < len(arr)
    if arr[i] == x
      return true
    end
    i = i + 1
  end
  return false
end
""", lambda arr, x: x in arr,
    lambda r: [[r.randint(0, 9) for _ in range(r.randint(0, 6))], r.randint(0, 9)])


lib("sign", """
fn sign(x)
  if x > 0
    return 1
  else
    if x < 0
      return -1
    end
  end
  return 0
end
""", lambda x: (x > 0) - (x < 0), lambda r: [r.randint(-5, 5)])


def triangle(a, b, c):
    if a + b <= c or a + c <= b or b + c <= a:
        return 0
    if a == b == c:
        return 1
    if a == b or b == c or a == c:
        return 2
    return 3


lib("triangle", """
fn triangle(a, b, c)
  if a + b <= c or a + c <= b or b + c <= a
    return 0
  end
  if a == b and b == c
    return 1
  end
  if a == b or b == c or a == c
    return 2
  end
  return 3
end
""", triangle, lambda r: [r.randint(1, 8), r.randint(1, 8), r.randint(1, 8)])


lib("max_arr", """
fn max_arr(arr)
  let m = arr[0]
  let i = 1
  while i < len(arr)
    if arr[i] > m
      m = arr[i]
    end
    i = i + 1
  end
  return m
end
""", max, lambda r: [[r.randint(-30, 30) for _ in range(r.randint(1, 7))]])


# Returns ("output", printed values) rather than a value.
lib("countdown", """
fn countdown(n)
  while n > 0
    print n
    n = n - 1
  end
  return 0
end
""", lambda n: ("output", list(range(n, 0, -1))), lambda r: [r.randint(0, 6)])


# ------------------------------------------------------------- seeded bugs
#
# `model(buggy, *args)` evaluates the fixed (buggy=False) or the seeded
# (buggy=True) behaviour. `bug` is the 0-based line within `text` holding
# the fault and `fixed` the correct text of that line.

BUGS = []


def bug(name, cls, text, bug_line, buggy_text, model, gen, n_fail=2, n_pass=8, n_tests=80):
    lines = text.strip("\n").split("\n")
    fixed = None
    if bug_line is not None:
        fixed = lines[bug_line]
        lines[bug_line] = buggy_text
    BUGS.append(dict(name=name, cls=cls, lines=lines, bug_line=bug_line, fixed=fixed,
                     model=model, gen=gen, n_fail=n_fail, n_pass=n_pass, n_tests=n_tests))


def sum_to(buggy, n):
    s, i = 0, 1
    while (i < n) if buggy else (i <= n):
        s += i
        i += 1
    return s


bug("b01_sum_to", "relational", """
fn sum_to(n)
  let s = 0
  let i = 1
  while i <= n
    s = s + i
    i = i + 1
  end
  return s
end
""", 3, "  while i < n", sum_to, lambda r: [r.randint(-10, 12)], n_fail=2, n_pass=6, n_tests=60)


def count_above(buggy, arr, t):
    return sum(1 for x in arr if (x >= t if buggy else x > t))


bug("b02_count_above", "relational", """
fn count_above(arr, t)
  let c = 0
  let i = 0
  while i < len(arr)
    if arr[i] > t
      c = c + 1
    end
    i = i + 1
  end
  return c
end
""", 4, "    if arr[i] >= t", count_above,
    lambda r: [[r.randint(0, 9) for _ in range(r.randint(0, 6))], r.randint(0, 9)],
    n_fail=2, n_pass=14, n_tests=110)


def sum_first(buggy, arr, k):
    s = 0
    for i in range(k):
        s += at(arr, i + 1 if buggy else i)
    return s


def gen_sum_first(r):
    arr = [r.choice([r.randint(1, 9), 4]) for _ in range(r.randint(1, 7))]
    return [arr, r.randint(0, len(arr) - 1)]


bug("b03_sum_first", "off_by_one_index", """
fn sum_first(arr, k)
  let s = 0
  let i = 0
  while i < k
    s = s + arr[i]
    i = i + 1
  end
  return s
end
""", 4, "    s = s + arr[i + 1]", sum_first, gen_sum_first, n_fail=2, n_pass=10, n_tests=90)


def step_sum(buggy, arr):
    return sum(arr[::3 if buggy else 2])


bug("b04_step_sum", "wrong_constant", """
fn step_sum(arr)
  let s = 0
  let i = 0
  while i < len(arr)
    s = s + arr[i]
    i = i + 2
  end
  return s
end
""", 5, "    i = i + 3", step_sum,
    lambda r: [[r.randint(-5, 9) for _ in range(r.randint(0, 7))]], n_fail=2, n_pass=12, n_tests=100)


def fee(buggy, amount):
    if amount > 100:
        return tdiv(amount, 10)
    return 6 if buggy else 5


bug("b05_fee", "wrong_constant", """
fn fee(amount)
  if amount > 100
    return amount / 10
  end
  return 5
end
""", 4, "  return 6", fee, lambda r: [r.randint(0, 400)], n_fail=2, n_pass=10, n_tests=75)


def mean_or_neg(buggy, arr):
    s = sum(arr)
    a = -1
    if buggy or len(arr) != 0:
        a = div(s, len(arr))
    return a


bug("b06_mean_or_neg", "missing_guard", """
fn mean_or_neg(arr)
  let s = 0
  let i = 0
  while i < len(arr)
    s = s + arr[i]
    i = i + 1
  end
  let a = -1
  if len(arr) != 0
    a = s / len(arr)
  end
  return a
end
""", None, None, mean_or_neg,
    lambda r: [[r.randint(0, 20) for _ in range(r.choice([0, r.randint(1, 6)]))]],
    n_fail=1, n_pass=12, n_tests=95)


def pick_sum(buggy, arr, idxs):
    s = 0
    for k in idxs:
        if buggy or (0 <= k < len(arr)):
            s += at(arr, k)
    return s


bug("b07_pick_sum", "missing_guard", """
fn pick_sum(arr, idxs)
  let s = 0
  let j = 0
  let k = 0
  while j < len(idxs)
    k = idxs[j]
    if k >= 0 and k < len(arr)
      s = s + arr[k]
    end
    j = j + 1
  end
  return s
end
""", None, None, pick_sum,
    lambda r: [[r.randint(1, 9) for _ in range(4)], [r.randint(0, 4) for _ in range(r.randint(0, 4))]],
    n_fail=2, n_pass=14, n_tests=120)


def double_total(buggy, arr):
    s = sum(arr)
    return s * 2 if buggy else s


bug("b08_total", "wrong_return_variable", """
fn total(arr)
  let s = 0
  let i = 0
  while i < len(arr)
    s = s + arr[i]
    i = i + 1
  end
  let t = s * 2
  return s
end
""", 8, "  return t", double_total,
    lambda r: [[r.randint(-9, 9) for _ in range(r.randint(0, 6))]], n_fail=2, n_pass=8, n_tests=70)


def count_in_range(buggy, arr, lo, hi):
    return sum(1 for x in arr if x >= lo and (x <= hi if buggy else x < hi))


bug("b09_count_in_range", "relational", """
fn count_in_range(arr, lo, hi)
  let c = 0
  let i = 0
  while i < len(arr)
    if arr[i] >= lo and arr[i] < hi
      c = c + 1
    end
    i = i + 1
  end
  return c
end
""", 4, "    if arr[i] >= lo and arr[i] <= hi", count_in_range,
    lambda r: [[r.randint(0, 12) for _ in range(r.randint(0, 6))], r.randint(0, 4), r.randint(5, 10)],
    n_fail=3, n_pass=15, n_tests=130)


def new_highs(buggy, arr):
    if not arr:
        return 0
    m, c = arr[0], 0
    for x in arr[1:]:
        if (x >= m) if buggy else (x > m):
            c += 1
            m = x
    return c


bug("b10_new_highs", "relational", """
fn new_highs(arr)
  let c = 0
  if len(arr) == 0
    return c
  end
  let m = arr[0]
  let i = 1
  while i < len(arr)
    if arr[i] > m
      c = c + 1
      m = arr[i]
    end
    i = i + 1
  end
  return c
end
""", 8, "    if arr[i] >= m", new_highs,
    lambda r: [[r.randint(0, 6) for _ in range(r.randint(0, 6))]], n_fail=2, n_pass=12, n_tests=100)


def magnitude(buggy, x):
    return -x if ((x < -1) if buggy else (x < 0)) else x


# The failing input skips the faulty branch, so the slice drops it.
bug("b11_magnitude", "relational", """
fn magnitude(x)
  let r = x
  if x < 0
    r = -x
  end
  return r
end
""", 2, "  if x < -1", magnitude, lambda r: [r.randint(-9, 9)], n_fail=1, n_pass=10, n_tests=65)


def scaled_sum(buggy, arr):
    s = 0
    for i, x in enumerate(arr):
        s += x * (i + 1 if not buggy else i + 2)
    return s


bug("b12_weighted_sum", "wrong_constant", """
fn weighted_sum(arr)
  let s = 0
  let i = 0
  let w = 1
  while i < len(arr)
    s = s + arr[i] * w
    w = w + 1
    i = i + 1
  end
  return s
end
""", 3, "  let w = 2", scaled_sum,
    lambda r: [[r.choice([0, r.randint(-4, 6)]) for _ in range(r.randint(0, 5))]],
    n_fail=2, n_pass=10, n_tests=85)


def last_even(buggy, arr):
    r = -1
    for i in range(len(arr)):
        if arr[i] % 2 == 0:
            r = at(arr, i - 1) if buggy else arr[i]
    return r


bug("b13_last_even", "off_by_one_index", """
fn last_even(arr)
  let r = -1
  let i = 0
  while i < len(arr)
    if arr[i] % 2 == 0
      r = arr[i]
    end
    i = i + 1
  end
  return r
end
""", 5, "      r = arr[i - 1]", last_even,
    lambda r: [[r.randint(1, 9) for _ in range(r.randint(0, 6))]],
    n_fail=2, n_pass=12, n_tests=100)


# ------------------------------------------------------------- emission


def to_value(v):
    if isinstance(v, bool):
        return {"bool": v}
    if isinstance(v, int):
        return {"int": v}
    if isinstance(v, list):
        return {"array": [to_value(x) for x in v]}
    raise TypeError(v)


def observe(fn, args):
    try:
        out = fn(*args)
    except Err as e:
        return {"error": e.kind}
    if isinstance(out, tuple) and out[0] == "output":
        return {"output": [to_value(x) for x in out[1]]}
    return {"value": to_value(out)}


def guard_bug(spec):
    """Missing-guard bundles drop a guard `if` and its `end`."""
    lines = list(spec["lines"])
    g = next(i for i, l in enumerate(lines) if l.strip().startswith("if ") and
             ("!= 0" in l or "< len(" in l))
    end = next(i for i in range(g + 1, len(lines)) if lines[i].strip() == "end")
    body = lines[g + 1:end]
    guard = lines[g]
    stripped = lines[:g] + [b[2:] for b in body] + lines[end + 1:]
    return stripped, g, guard


def build(spec, r):
    names = [n for n in LIBRARY]
    r.shuffle(names)
    libs = names[: r.randint(6, 9)]
    target = spec["name"].split("_", 1)[1]

    if spec["bug_line"] is None:
        fn_lines, bug_idx, fixed = guard_bug(spec)
    else:
        fn_lines, bug_idx, fixed = spec["lines"], spec["bug_line"], spec["fixed"]

    pos = r.randint(1, len(libs) - 1)
    order = libs[:pos] + [target] + libs[pos:]
    program, bug_line = [], None
    for name in order:
        if program:
            program.append("")
        if name == target:
            program.append(f"# {target}")
            bug_line = len(program) + bug_idx + 1
            program.extend(fn_lines)
        else:
            program.extend(LIBRARY[name][0])

    model = spec["model"]
    fail, ok, seen = [], [], set()
    for _ in range(20000):
        args = spec["gen"](r)
        key = json.dumps(args)
        if key in seen:
            continue
        seen.add(key)
        want = observe(lambda *a: model(False, *a), args)
        got = observe(lambda *a: model(True, *a), args)
        assert "error" not in want, (spec["name"], args)
        if want != got and len(fail) < spec["n_fail"]:
            fail.append((args, want))
        elif want == got and len(ok) < spec["n_pass"]:
            ok.append((args, want))
        if len(fail) == spec["n_fail"] and len(ok) == spec["n_pass"]:
            break
    assert len(fail) == spec["n_fail"] and len(ok) == spec["n_pass"], spec["name"]

    cases = [(target, a, w) for a, w in fail + ok]
    while len(cases) < spec["n_tests"]:
        name = r.choice(libs)
        _, fn, gen = LIBRARY[name]
        args = gen(r)
        cases.append((name, args, observe(fn, args)))
    r.shuffle(cases)
    counters = {}
    tests = []
    for name, args, want in cases:
        counters[name] = counters.get(name, 0) + 1
        tests.append({
            "id": f"{name}_{counters[name]:03}",
            "call": {"fn": name, "args": [to_value(a) for a in args]},
            "expect": want,
        })
    relevant = len(fail) + len(ok)
    assert relevant <= 0.2 * len(tests), (spec["name"], relevant, len(tests))
    return program, tests, bug_line, fixed


def main():
    r = random.Random(SEED)
    for spec in BUGS:
        program, tests, bug_line, fixed = build(spec, r)
        d = OUT / spec["name"]
        d.mkdir(exist_ok=True)
        (d / "program.sl").write_text("\n".join(program) + "\n")
        (d / "tests.json").write_text(json.dumps(tests, indent=1) + "\n")
        manifest = {
            "program": "program.sl",
            "tests": "tests.json",
            "bug_class": spec["cls"],
            "ground_truth": {"bug_line": bug_line, "patched_text": fixed},
        }
        (d / "manifest.json").write_text(json.dumps(manifest, indent=1) + "\n")
        print(f"{spec['name']}: {len(program)} lines, {len(tests)} tests, bug at line {bug_line}")


if __name__ == "__main__":
    main()
