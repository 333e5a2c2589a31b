#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <vector>

#include "framedn/frame.hpp"
#include "framedn/matrix_io.hpp"
#include "framedn/rng.hpp"
#include "framedn/types.hpp"
#include "oracles.hpp"

using namespace framedn;

TEST_CASE("identity frame") {
  const FrameOperator f = build_frame(MatX::Identity(2, 2));
  CHECK(f.rows() == 2);
  CHECK(f.cols() == 2);
  CHECK(f.alpha().has_value());
  CHECK(*f.alpha() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK((f.pseudoInverse() - MatX::Identity(2, 2)).norm() < 1e-12);
  CHECK((f.gram() - MatX::Identity(2, 2)).norm() < 1e-12);
  CHECK((f.dualGram() - MatX::Identity(2, 2)).norm() < 1e-12);
  CHECK(f.lowerBound() == doctest::Approx(1.0));
  CHECK(f.upperBound() == doctest::Approx(1.0));
}

TEST_CASE("stacked identity frame is tight with alpha two") {
  MatX w(4, 2);
  w << 1, 0, 0, 1, 1, 0, 0, 1;
  const FrameOperator f = build_frame(w);
  REQUIRE(f.alpha().has_value());
  CHECK(*f.alpha() == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(f.lowerBound() == doctest::Approx(2.0));
  CHECK(f.upperBound() == doctest::Approx(2.0));
  // Pseudoinverse of a stacked pair of identities averages the halves.
  MatX expect(2, 4);
  expect << 0.5, 0, 0.5, 0, 0, 0.5, 0, 0.5;
  CHECK((f.pseudoInverse() - expect).norm() < 1e-12);
}

TEST_CASE("random frame matches independent SVD computations") {
  const MatX w = oracle::random_general_frame(11, 8, 4, 5.0);
  const FrameOperator f = build_frame(w);
  const MatX wp = oracle::pinv(w);
  CHECK((f.pseudoInverse() - wp).norm() < 1e-9);
  const MatX um = wp.transpose() * wp;
  CHECK((f.dualGram() - um).norm() < 1e-9);
  CHECK((f.gram() - w * w.transpose()).norm() < 1e-12);
  // Frame bounds are the extreme eigenvalues of W^T W.
  const oracle::Svd d = oracle::svd(w);
  CHECK(f.upperBound() == doctest::Approx(d.s[0] * d.s[0]).epsilon(1e-9));
  CHECK(f.lowerBound() == doctest::Approx(d.s[3] * d.s[3]).epsilon(1e-9));
  CHECK(!f.alpha().has_value());
  // trace(U U-) equals the signal dimension for any frame.
  const double tr = (f.gram() * f.dualGram()).trace();
  CHECK(tr == doctest::Approx(4.0).epsilon(1e-9));
  CHECK(f.dualGramGramDiag().sum() == doctest::Approx(4.0).epsilon(1e-9));
}

TEST_CASE("analyze and synthesize agree with direct least squares") {
  const MatX w = oracle::random_general_frame(17, 10, 6, 3.0);
  const FrameOperator f = build_frame(w);
  const VecX x = oracle::random_vector(5, 6);
  CHECK((f.analyze(x) - w * x).norm() < 1e-12);
  const VecX y = oracle::random_vector(6, 10);
  // Minimum-norm least squares through the normal equations.
  const VecX ls = (w.transpose() * w).ldlt().solve(w.transpose() * y);
  CHECK((f.synthesize(y) - ls).norm() < 1e-9);
  CHECK_THROWS_AS((void)f.analyze(oracle::random_vector(1, 5)),
                  DimensionMismatch);
  CHECK_THROWS_AS((void)f.synthesize(oracle::random_vector(1, 6)),
                  DimensionMismatch);
}

TEST_CASE("scaled tight frame identities") {
  // W = sqrt(2) Q has W^T W = 2 I, so U- U = U / 2.
  const MatX w = std::sqrt(2.0) * oracle::random_tight_frame(23, 9, 5);
  const FrameOperator f = build_frame(w);
  REQUIRE(f.alpha().has_value());
  CHECK(*f.alpha() == doctest::Approx(2.0).epsilon(1e-10));
  const MatX lhs = f.dualGram() * f.gram();
  CHECK((lhs - f.gram() / 2.0).norm() < 1e-9);
  CHECK((f.pseudoInverse() - w.transpose() / 2.0).norm() < 1e-9);
}

TEST_CASE("build_frame input validation") {
  CHECK_THROWS_AS((void)build_frame(MatX::Zero(2, 3)), DimensionMismatch);
  MatX rankDef(4, 2);
  rankDef << 1, 1, 2, 2, 3, 3, 4, 4;
  CHECK_THROWS_AS((void)build_frame(rankDef), RankDeficient);
}

TEST_CASE("small lattice frame is tight and traces to n") {
  const FrameOperator f = gabor_frame(8, 4, 2, 4);
  CHECK(f.rows() == 16);
  CHECK(f.cols() == 8);
  REQUIRE(f.alpha().has_value());
  CHECK(*f.alpha() == doctest::Approx(1.0).epsilon(1e-8));
  const MatX wp = oracle::pinv(f.matrix());
  CHECK((f.pseudoInverse() - wp).norm() < 1e-8);
  const MatX um = wp.transpose() * wp;
  const double tr = (f.matrix() * f.matrix().transpose() * um).trace();
  CHECK(tr == doctest::Approx(8.0).epsilon(1e-8));
  // Quadrature groups partition the rows; sizes are one or two.
  const auto& groups = f.quadratureGroups();
  std::vector<int> seen(16, 0);
  for (const auto& g : groups) {
    CHECK(g.size() >= 1);
    CHECK(g.size() <= 2);
    for (Index r : g) seen[static_cast<std::size_t>(r)]++;
  }
  for (int c : seen) CHECK(c == 1);
  // channels = 4 gives one DC row, one cosine/sine pair, one Nyquist row
  // per shift; four shifts of hop 2 cover n = 8.
  CHECK(groups.size() == 12);
}

TEST_CASE("benchmark lattice frame") {
  const FrameOperator f = gabor_frame(1280, 64, 32, 64);
  CHECK(f.rows() == 2560);
  CHECK(f.cols() == 1280);
  REQUIRE(f.alpha().has_value());
  CHECK(*f.alpha() == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(f.lowerBound() == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(f.upperBound() == doctest::Approx(1.0).epsilon(1e-8));
  // For a tight alpha = 1 frame, diag(U- U) = diag(U^2) = diag(U).
  CHECK(f.dualGramGramDiag().sum() == doctest::Approx(1280.0).epsilon(1e-8));
  const auto& groups = f.quadratureGroups();
  CHECK(groups.size() == 1320);
  std::size_t covered = 0;
  for (const auto& g : groups) covered += g.size();
  CHECK(covered == 2560);
  // Round trip: analysis followed by synthesis reproduces the signal.
  const VecX x = oracle::random_vector(77, 1280);
  CHECK((f.synthesize(f.analyze(x)) - x).norm() < 1e-8 * x.norm());
}

TEST_CASE("lattice validation") {
  CHECK_THROWS_AS((void)gabor_frame(9, 4, 2, 4), InvalidLattice);
  CHECK_THROWS_AS((void)gabor_frame(8, 4, 3, 4), InvalidLattice);
  CHECK_THROWS_AS((void)gabor_frame(8, 4, 4, 2), InvalidLattice);
  CHECK_THROWS_AS((void)gabor_frame(8, 16, 2, 4), InvalidLattice);
}

TEST_CASE("cosine basis matches the FFTW reference") {
  for (Index n : {Index{4}, Index{16}, Index{33}}) {
    const MatX b = dct_basis(n);
    const MatX ref = oracle::dct_reference(n);
    CHECK((b - ref).norm() < 1e-10);
    CHECK((b * b.transpose() - MatX::Identity(n, n)).norm() < 1e-10);
  }
  CHECK_THROWS_AS((void)dct_basis(0), InvalidLength);
}

TEST_CASE("haar basis structure") {
  const MatX h2 = haar_basis(2, 1);
  const double r = 1.0 / std::sqrt(2.0);
  MatX expect(2, 2);
  expect << r, r, r, -r;
  CHECK((h2 - expect).norm() < 1e-12);

  const MatX h8 = haar_basis(8, 3);
  CHECK((h8 * h8.transpose() - MatX::Identity(8, 8)).norm() < 1e-12);
  // Row 0 is the constant scaling function at three levels.
  CHECK((h8.row(0) - MatX::Constant(1, 8, 1.0 / std::sqrt(8.0))).norm() <
        1e-12);
  // Row 1 is the coarsest detail: +1 on the first half, -1 on the second.
  VecX d0(8);
  d0 << 1, 1, 1, 1, -1, -1, -1, -1;
  CHECK((h8.row(1).transpose() - d0 / std::sqrt(8.0)).norm() < 1e-12);
  // Finest details occupy the last four rows with support two.
  for (Index k = 4; k < 8; ++k) {
    CHECK((h8.row(k).cwiseAbs().transpose() - VecX::Zero(8)).norm() > 0.0);
    int nz = 0;
    for (Index j = 0; j < 8; ++j) {
      if (std::abs(h8(k, j)) > 1e-14) ++nz;
    }
    CHECK(nz == 2);
  }

  const MatX h64 = haar_basis(64, 3);
  CHECK((h64 * h64.transpose() - MatX::Identity(64, 64)).norm() < 1e-12);
  // Three levels on n = 64 leave eight scaling rows of width eight.
  for (Index k = 0; k < 8; ++k) {
    int nz = 0;
    for (Index j = 0; j < 64; ++j) {
      if (std::abs(h64(k, j)) > 1e-14) ++nz;
    }
    CHECK(nz == 8);
  }

  CHECK_THROWS_AS((void)haar_basis(12, 2), InvalidLength);
  CHECK_THROWS_AS((void)haar_basis(8, 0), InvalidLength);
  CHECK_THROWS_AS((void)haar_basis(8, 4), InvalidLength);
}

TEST_CASE("orthonormal basis collections") {
  const MatX c8 = dct_basis(8);
  const MatX h8 = haar_basis(8, 3);
  const BasisCollection bc = ortho_collection({c8, h8}, {"cosine", "haar"});
  CHECK(bc.n() == 8);
  CHECK(bc.count() == 2);
  CHECK(bc.blockLabel(0) == "cosine");
  // Cross-Gram blocks of orthonormal bases compose to the identity.
  const MatX prod = bc.crossGram(0, 1) * bc.crossGram(1, 0);
  CHECK((prod - MatX::Identity(8, 8)).norm() < 1e-10);
  CHECK((bc.crossGram(0, 0) - MatX::Identity(8, 8)).norm() < 1e-10);

  const VecX x = oracle::random_vector(31, 8);
  const auto ys = bc.analyze_blocks(x);
  REQUIRE(ys.size() == 2);
  CHECK((ys[0] - c8 * x).norm() < 1e-12);
  CHECK((bc.synthesize_block(1, ys[1]) - x).norm() < 1e-10);

  // The stacked matrix is the tight frame of all blocks; its pseudoinverse
  // averages the per-block syntheses.
  const MatX stacked = bc.stacked_matrix();
  CHECK(stacked.rows() == 16);
  const FrameOperator f = build_frame(stacked);
  REQUIRE(f.alpha().has_value());
  CHECK(*f.alpha() == doctest::Approx(2.0).epsilon(1e-10));
  VecX yall(16);
  yall << ys[0], ys[1];
  const VecX viaFrame = f.synthesize(yall);
  const VecX viaBlocks =
      0.5 * (bc.synthesize_block(0, ys[0]) + bc.synthesize_block(1, ys[1]));
  CHECK((viaFrame - viaBlocks).norm() < 1e-10);

  MatX rot(2, 2);
  const double a = std::sqrt(0.5);
  rot << a, -a, a, a;
  const BasisCollection two = ortho_collection({MatX::Identity(2, 2), rot});
  CHECK(two.count() == 2);
  CHECK(two.blockLabel(1) == "basis1");

  CHECK_THROWS_AS((void)ortho_collection({}), DimensionMismatch);
  CHECK_THROWS_AS((void)ortho_collection({c8, MatX::Identity(4, 4)}),
                  DimensionMismatch);
  MatX notOrtho = MatX::Identity(3, 3);
  notOrtho(0, 0) = 2.0;
  CHECK_THROWS_AS((void)ortho_collection({notOrtho}), NotOrthonormal);
  CHECK_THROWS_AS((void)ortho_collection({c8, h8}, {"just one"}),
                  DimensionMismatch);
}

TEST_CASE("matrix file round trip") {
  const MatX m = oracle::random_matrix(3, 5, 7);
  const std::string path = "/tmp/framedn_test_matrix.bin";
  write_matrix(path, m);
  const MatX back = read_matrix(path);
  REQUIRE(back.rows() == 5);
  REQUIRE(back.cols() == 7);
  CHECK((back - m).norm() == 0.0);
  std::remove(path.c_str());
  CHECK_THROWS_AS((void)read_matrix("/tmp/framedn_no_such_file.bin"), IoError);
}

TEST_CASE("sparse dual gram matches the dense one") {
  const FrameOperator f = gabor_frame(64, 8, 4, 8);
  const MatX dense = f.dualGram();
  MatX fromSparse = MatX::Zero(f.rows(), f.rows());
  for (int k = 0; k < f.dualGramSparse().outerSize(); ++k) {
    for (SpMat::InnerIterator it(f.dualGramSparse(), k); it; ++it) {
      fromSparse(it.row(), it.col()) = it.value();
    }
  }
  // Pruning drops only entries below 1e-12.
  CHECK((dense - fromSparse).cwiseAbs().maxCoeff() < 1e-11);
  // Hadamard pattern carries U o U-.
  const MatX gram = f.gram();
  for (int k = 0; k < f.hadamard().outerSize(); ++k) {
    for (SpMat::InnerIterator it(f.hadamard(), k); it; ++it) {
      CHECK(it.value() ==
            doctest::Approx(gram(it.row(), it.col()) * dense(it.row(), it.col()))
                .epsilon(1e-9));
    }
  }
}
