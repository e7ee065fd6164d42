#include <string>
#include <vector>

#include "doctest.h"
#include "gtpn/molgraph.hpp"
#include "gtpn/rng.hpp"
#include "gtpn/smiles.hpp"

using namespace gtpn;

TEST_CASE("parsing basic chains and bond symbols") {
  MolGraph g = parse_smiles("CCO");
  REQUIRE(g.num_atoms() == 3);
  CHECK(g.atom(0).element == 6);
  CHECK(g.atom(2).element == 8);
  CHECK(g.bond(0, 1) == BondType::kSingle);
  CHECK(g.bond(1, 2) == BondType::kSingle);

  MolGraph h = parse_smiles("C=C#N");
  CHECK(h.bond(0, 1) == BondType::kDouble);
  CHECK(h.bond(1, 2) == BondType::kTriple);

  MolGraph two = parse_smiles("Cl-Br");
  CHECK(two.num_atoms() == 2);
  CHECK(two.atom(0).element == 17);
  CHECK(two.atom(1).element == 35);
}

TEST_CASE("branches nest and return to the attachment atom") {
  MolGraph g = parse_smiles("CC(C)(O)N");
  REQUIRE(g.num_atoms() == 5);
  CHECK(g.atom(1).degree == 4);
  CHECK(g.bond(1, 2) == BondType::kSingle);
  CHECK(g.bond(1, 3) == BondType::kSingle);
  CHECK(g.bond(1, 4) == BondType::kSingle);
  CHECK(g.bond(0, 1) == BondType::kSingle);
}

TEST_CASE("ring closures: digits, %nn, bond symbols on either end") {
  MolGraph ring = parse_smiles("C1CCCCC1");
  CHECK(ring.num_atoms() == 6);
  CHECK(ring.bond(0, 5) == BondType::kSingle);
  CHECK(ring.atom(0).in_ring);

  MolGraph dbl = parse_smiles("C=1CCCCC1");
  CHECK(dbl.bond(0, 5) == BondType::kDouble);
  MolGraph dbl2 = parse_smiles("C1CCCCC=1");
  CHECK(dbl2.bond(0, 5) == BondType::kDouble);

  MolGraph wide = parse_smiles("C%10CCC%10");
  CHECK(wide.bond(0, 3) == BondType::kSingle);

  // Closure numbers free up after use and can be reused.
  MolGraph reuse = parse_smiles("C1CC1C1CC1");
  CHECK(reuse.bond(0, 2) == BondType::kSingle);
  CHECK(reuse.bond(3, 5) == BondType::kSingle);
}

TEST_CASE("aromatic atoms default their mutual bonds to aromatic") {
  MolGraph bz = parse_smiles("c1ccccc1");
  CHECK(bz.num_atoms() == 6);
  CHECK(bz.bond(0, 1) == BondType::kAromatic);
  CHECK(bz.bond(0, 5) == BondType::kAromatic);
  CHECK(bz.atom(0).element == 6);

  // Aromatic-to-aliphatic bonds stay single.
  MolGraph tol = parse_smiles("Cc1ccccc1");
  CHECK(tol.bond(0, 1) == BondType::kSingle);
  CHECK(tol.bond(1, 2) == BondType::kAromatic);

  MolGraph pyr = parse_smiles("c1ccncc1");
  CHECK(pyr.atom(3).element == 7);
}

TEST_CASE("bracket atoms: charge, explicit hydrogens, atom maps") {
  MolGraph g = parse_smiles("[CH3:7][N+:2]([O-])C");
  REQUIRE(g.num_atoms() == 4);
  CHECK(g.atom(0).explicit_h == 3);
  CHECK(g.atom(0).map_number == 7);
  CHECK(g.atom(1).element == 7);
  CHECK(g.atom(1).charge == 1);
  CHECK(g.atom(1).map_number == 2);
  CHECK(g.atom(2).charge == -1);

  CHECK(parse_smiles("[Fe+3]").atom(0).charge == 3);
  CHECK(parse_smiles("[O--]").atom(0).charge == -2);
  CHECK(parse_smiles("[NH4+]").atom(0).explicit_h == 4);
  CHECK(parse_smiles("[Na]").atom(0).element == 11);
}

TEST_CASE("dot separates disconnected components") {
  MolGraph g = parse_smiles("CC.O.[Na+]");
  CHECK(g.num_atoms() == 4);
  CHECK(g.bond(0, 1) == BondType::kSingle);
  CHECK(g.bond(1, 2) == BondType::kNull);
  std::vector<int> comp = g.components();
  CHECK(comp[0] == comp[1]);
  CHECK(comp[1] != comp[2]);
  CHECK(comp[2] != comp[3]);
}

TEST_CASE("syntax errors carry kind and byte offset") {
  auto expect = [](const char* smiles, SmilesError::Kind kind, size_t offset) {
    INFO(std::string(smiles));
    try {
      parse_smiles(smiles);
      FAIL("expected a parse error");
    } catch (const SmilesError& e) {
      CHECK(e.kind() == kind);
      CHECK(e.offset() == offset);
    }
  };
  using K = SmilesError::Kind;

  // Offsets point at the offending token (the unmatched opener for
  // unterminated constructs).
  expect("C(C", K::kSyntax, 3);        // unclosed branch, noticed at the end
  expect("C)C", K::kSyntax, 1);        // stray close
  expect("C1CC", K::kSyntax, 1);       // dangling ring closure
  expect("CC=", K::kSyntax, 2);        // trailing bond
  expect("C=.C", K::kSyntax, 1);       // bond before separator
  expect("[C", K::kSyntax, 0);         // unclosed bracket
  expect("[]", K::kSyntax, 1);         // empty bracket
  expect("C=1CC#1", K::kSyntax, 6);    // closure bond symbols disagree
  expect("C11", K::kSyntax, 2);        // self ring bond
  expect("=CC", K::kSyntax, 0);        // leading bond
  expect("C@C", K::kUnsupported, 1);   // stereo outside brackets
  expect("[C@H](C)C", K::kUnsupported, 2);
  expect("C/C=C/C", K::kUnsupported, 1);
  expect("[13C]", K::kUnsupported, 1);  // isotope
  expect("C*C", K::kUnsupported, 1);    // wildcard
  expect("[Zz]", K::kUnknownElement, 1);
  expect("Cx", K::kSyntax, 1);  // lowercase non-aromatic
}

TEST_CASE("writer round-trips structures through the parser") {
  const char* cases[] = {
      "CCO",
      "C=C#N",
      "CC(C)(O)N",
      "C1CCCCC1",
      "c1ccccc1",
      "Cc1ccc(O)cc1",
      "[CH3:1][C:2](=[O:3])[OH:4]",
      "[NH4+].[O-]C=O",
      "C1CC2CCC1CC2",      // fused bicycle
      "CC.O.[Na+].[Cl-]",  // multiple components
      "[O-]c1ccccc1",
      "C%10CCC%10",
  };
  for (const char* s : cases) {
    INFO(s);
    MolGraph g = parse_smiles(s);
    std::string out = write_smiles(g);
    INFO(out);
    MolGraph back = parse_smiles(out);
    CHECK(canonical_hash(g, true) == canonical_hash(back, true));
    CHECK(g.num_atoms() == back.num_atoms());
    CHECK(g.num_bonds() == back.num_bonds());
  }
}

TEST_CASE("writer round-trips randomized graphs") {
  Rng rng(31);
  const int elements[] = {6, 7, 8, 16, 15, 9, 17};
  for (int trial = 0; trial < 120; ++trial) {
    int n = 1 + rng.below(9);
    MolGraph g;
    for (int i = 0; i < n; ++i) {
      Atom a;
      a.element = elements[rng.below(7)];
      if (rng.bernoulli(0.3)) a.charge = rng.below(5) - 2;
      if (rng.bernoulli(0.3)) a.explicit_h = rng.below(4);
      if (rng.bernoulli(0.5)) a.map_number = i + 1;
      g.add_atom(a);
    }
    const BondType types[] = {BondType::kSingle, BondType::kDouble, BondType::kTriple,
                              BondType::kAromatic};
    for (int i = 1; i < n; ++i)
      if (rng.bernoulli(0.8)) g.set_bond(rng.below(i), i, types[rng.below(4)]);
    for (int extra = 0; extra < 2; ++extra) {
      int u = rng.below(n), v = rng.below(n);
      if (u != v && g.bond(u, v) == BondType::kNull && rng.bernoulli(0.5))
        g.set_bond(u, v, types[rng.below(4)]);
    }

    std::string out = write_smiles(g);
    INFO(out);
    MolGraph back = parse_smiles(out);
    CHECK(canonical_hash(g, true) == canonical_hash(back, true));
  }
}

TEST_CASE("writer emits brackets only when needed") {
  MolGraph g;
  Atom c;
  c.element = 6;
  g.add_atom(c);
  CHECK(write_smiles(g) == "C");

  Atom charged = c;
  charged.charge = 1;
  MolGraph h;
  h.add_atom(charged);
  CHECK(write_smiles(h).front() == '[');
}
