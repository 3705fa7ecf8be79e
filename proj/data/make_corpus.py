"""Generates the bundled synthetic repeat-unit corpus (data/polymers.csv).

Structures are combinatorial: vinyl, (meth)acrylate and styrenic chains plus
condensation polymers (esters, amides, carbonates, urethanes, ethers,
imides) built from a fixed set of diacid, diol and diamine pieces.
"""

import csv
import itertools
import pathlib

ALKYL = ["C", "CC", "CCC", "CCCC", "CCCCCC", "CC(C)C", "C(C)(C)C", "CCO", "CCOC",
         "CC(F)(F)F", "C1CCCCC1", "c1ccccc1", "Cc1ccccc1", "CCCCCCCC"]
VINYL_SIDE = ["C", "CC", "CCC", "CC(C)C", "c1ccccc1", "C#N", "Cl", "F", "OC(C)=O", "C(N)=O",
              "C(=O)O", "OC", "OCC", "c1ccncc1", "n1ccnc1", "Br", "C(F)(F)F", "c1ccc2ccccc2c1"]
STYRENE_PARA = ["C", "Cl", "F", "Br", "OC", "C(C)(C)C", "C(=O)OC", "N(C)C", "C#N", "O", "CC",
                "S(C)(=O)=O"]
# Divalent pieces, written so that the next atom attaches to the last atom.
DIACID = ["CC", "CCCC", "CCCCCC", "CCCCCCCC", "c1ccc(cc1)", "c1cccc(c1)", "c1ccc2cc(ccc2c1)"]
DIOL = ["CC", "CCCC", "CCCCCC", "CC(C)", "c1ccc(cc1)C(C)(C)c1ccc(cc1)",
        "c1ccc(cc1)", "CC1CCC(CC1)C"]
DIAMINE = ["CCCCCC", "c1ccc(cc1)", "c1ccc(cc1)Oc1ccc(cc1)", "c1ccc(cc1)Cc1ccc(cc1)", "CCCC"]


def repeat_units():
    for r in VINYL_SIDE:
        yield f"*CC(*){r}"
        yield f"*CC(*)(C){r}"
    for r in ALKYL:
        yield f"*CC(*)C(=O)O{r}"
        yield f"*CC(*)(C)C(=O)O{r}"
    for x in STYRENE_PARA:
        yield f"*CC(*)c1ccc({x})cc1"
    for d, e in itertools.product(DIACID, DIOL):
        yield f"*OC(=O){d}C(=O)O{e}*"
    for d, e in itertools.product(DIACID, DIAMINE):
        yield f"*NC(=O){d}C(=O)N{e}*"
    for e in DIOL:
        yield f"*OC(=O)O{e}*"
        yield f"*O{e}*"
    for a, e in itertools.product(DIAMINE, DIOL):
        yield f"*C(=O)N{a}NC(=O)O{e}O*"
    for a in DIAMINE:
        yield f"*N1C(=O)c2ccc(cc2C1=O)C(=O)N{a}*"
        yield f"*N1C(=O)c2cc3C(=O)N(C(=O)c3cc2C1=O){a}*"


def main():
    out = pathlib.Path(__file__).with_name("polymers.csv")
    seen = set()
    rows = []
    for smi in repeat_units():
        if smi in seen:
            continue
        seen.add(smi)
        rows.append(smi)
    with out.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["smiles"])
        for smi in rows:
            w.writerow([smi])
    print(f"wrote {len(rows)} repeat units to {out}")


if __name__ == "__main__":
    main()
