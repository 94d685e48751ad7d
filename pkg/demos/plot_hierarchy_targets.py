"""
Where does the shared code go?
==============================

The consolidation target depends on how the two classes are related:
the same class keeps a private helper, siblings get a template method in
their common superclass, and unrelated classes share a static method in a
utility class.  Clones that need ``this`` cannot move to a utility class.
"""

from unclone.interp import equivalent
from unclone.plan import FailureReport, synthesize_plan
from unclone.rewrite import apply_plan
from unclone.syntax import parse_program, print_canonical
from unclone.syntax.ast import MethodRef

source = """class Shape {
    int size;
}

class Square extends Shape {
    int area(int k) {
        int s = this.size * k;
        print(s);
        return s * s;
    }
}

class Circle extends Shape {
    int peek(int k) {
        return this.size * k;
    }

    int area(int k) {
        int s = this.size * k;
        print(s);
        return s * s * 3;
    }
}

class Other {
    int size;

    int peek(int k) {
        return this.size * k;
    }
}

class Loose {
    int twice(int k) {
        int s = k + k;
        print(s);
        return s;
    }
}

class Tight {
    int twice(int j) {
        int s = j + j;
        print(s);
        return s;
    }
}
"""
program = parse_program(source)

# %%
# Siblings: the differing tail becomes a hook and the common part is
# pulled up into ``Shape``.
square, circle = MethodRef("Square", "area"), MethodRef("Circle", "area")
plan = synthesize_plan(program, square, circle)
print(plan.listing())
out = apply_plan(program, plan).program
print(print_canonical(out))
print([equivalent(program, out, r, n=50).equivalent for r in (square, circle)])

# %%
# Unrelated classes: a static helper in a utility class.
loose, tight = MethodRef("Loose", "twice"), MethodRef("Tight", "twice")
plan = synthesize_plan(program, loose, tight, utility="Helpers")
print(plan.listing())

# %%
# A pair that reads a field through ``this`` from unrelated classes is
# reported as not removable.
report = synthesize_plan(program, MethodRef("Circle", "peek"), MethodRef("Other", "peek"))
print(isinstance(report, FailureReport), report.listing())
