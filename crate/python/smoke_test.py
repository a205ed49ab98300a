"""Exercise the Python bindings end to end.

Build and install first:
    pip install maturin
    maturin build --release -m crates/py/Cargo.toml -o dist && pip install dist/epiplan-*.whl
"""

import epiplan

BOX = """
problem "box"
agents a b
perspective euclidean2d {
  aperture = 90
  pose = (a, ax, ay, adir)
  pose = (b, bx, by, bdir)
}
var ax: -3..3 @pos(ax, ay) = 0
var ay: -3..3 @pos(ax, ay) = 0
var adir: -179..180 @pos(ax, ay) = -135
const bx: -3..3 @pos(bx, by) = 3
const by: -3..3 @pos(bx, by) = 3
const bdir: -179..180 @pos(bx, by) = -135
const o: 0..3 @pos(1, 1) = 2
operator turn(d: {-90, 90}) { pre: adir < 90 and adir > -180 eff: adir := adir + d }
goal: K[a] (o = 2)
"""


def main():
    p = epiplan.Problem.parse(BOX, "box.epl")
    assert p.name == "box"
    assert p.agents == ["a", "b"]
    assert dict(p.initial_state())["o"] == 2
    assert not p.eval("K[a] (o = 2)")
    assert p.eval("K[b] (o = 2)")

    result = p.solve()
    assert result.solved and result.outcome == "SOLVED", result
    assert p.check(result.plan) == "valid"
    assert p.check([]) == "goal unmet"
    assert p.eval("K[a] (o = 2)", plan=result.plan)
    assert epiplan.Problem.parse(p.to_text()).actions() == p.actions()

    try:
        epiplan.Problem.parse('problem "p"\nagents a\nvar x 0..1 = 0\n', "bad.epl")
    except epiplan.ParseError as e:
        assert "bad.epl:3:7" in str(e), e
    else:
        raise AssertionError("malformed problem was accepted")

    bbl2 = epiplan.bbl(2)
    assert bbl2.solve().plan == ["move(-2,-2)", "move(-2,-2)"]
    assert bbl2.eval("K[a1] (vo3 = 3)") and not bbl2.eval("K[a2] (vo3 = 3)")
    assert epiplan.bbl(3).solve(max_nodes=500).outcome == "RESOURCE_LIMIT"

    sn = epiplan.benchmark("sn")
    assert len(sn) == 14 and sn[0][0] == "sn01"
    assert epiplan.grapevine(4, 1, 2).solve(search="novelty", width=2).solved
    assert epiplan.corridor(2, 4, 1, 1).solve().solved

    print("smoke test passed")


if __name__ == "__main__":
    main()
