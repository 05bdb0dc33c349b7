#include <cmath>

#include <gtest/gtest.h>

#include "lsf/rng.hpp"
#include "lsf/risk.hpp"

using namespace lsf;

namespace {

Eigen::MatrixXd noise_panel(std::uint64_t seed, Eigen::Index T, Eigen::Index N, double market_vol = 0.0) {
    CounterRng rng(seed);
    Eigen::MatrixXd r(T, N);
    for (Eigen::Index t = 0; t < T; ++t) {
        const double m = rng.normal(0.0, market_vol);
        for (Eigen::Index i = 0; i < N; ++i) r(t, i) = m + rng.normal(0.0, 0.01);
    }
    return r;
}

}  // namespace

TEST(Beta, ExactMultipleAndNull) {
    CounterRng rng(1);
    std::vector<double> idx(300), a(300), z(300);
    for (std::size_t t = 0; t < 300; ++t) {
        idx[t] = rng.normal(0.0, 0.01);
        a[t] = 2.0 * idx[t];
        z[t] = rng.normal(0.0, 0.01);
    }
    EXPECT_NEAR(*estimate_beta(a, idx), 2.0, 1e-12);
    // Null case: 3 standard errors of an OLS slope with 250 points is about 3 * 1/sqrt(250).
    EXPECT_LT(std::fabs(*estimate_beta(z, idx)), 3.0 / std::sqrt(250.0));
    for (std::size_t t = 0; t < 200; ++t) a[299 - t] = kMissing;
    EXPECT_FALSE(estimate_beta(a, idx).has_value());  // 50 of 250 usable
    EXPECT_FALSE(estimate_beta(std::vector<double>(300, 0.01), std::vector<double>(300, 0.02)).has_value());
}

TEST(Beta, RollingMatchesDirectEstimate) {
    const auto r = noise_panel(2, 400, 3, 0.01);
    PanelMatrix ret = r;
    ret(100, 1) = kMissing;
    std::vector<double> idx(400);
    for (Eigen::Index t = 0; t < 400; ++t) idx[t] = r.row(t).mean();
    const auto b = rolling_betas(ret, idx, 250, 125);
    for (Eigen::Index t : {125, 200, 250, 399}) {
        for (Eigen::Index i = 0; i < 3; ++i) {
            std::vector<double> xs, ys;
            for (Eigen::Index s = std::max<Eigen::Index>(0, t - 250); s < t; ++s) ys.push_back(ret(s, i)), xs.push_back(idx[s]);
            const auto direct = estimate_beta(ys, xs, ys.size());
            ASSERT_TRUE(direct.has_value());
            if (i == 1 && t <= 125) {
                EXPECT_FALSE(is_valid(b(t, i)));  // the hole leaves 124 usable rows
                continue;
            }
            EXPECT_NEAR(b(t, i), *direct, 1e-9) << t << " " << i;
        }
    }
    EXPECT_FALSE(is_valid(b(124, 0)));
}

TEST(RollingVol, MatchesSampleStd) {
    const auto r = noise_panel(3, 300, 2);
    const PanelMatrix ret = r;
    const auto v = rolling_vol(ret, 250, 60);
    EXPECT_FALSE(is_valid(v(58, 0)));
    for (Eigen::Index t : {59, 120, 299}) {
        const Eigen::Index first = std::max<Eigen::Index>(0, t - 249);
        const Eigen::VectorXd w = r.col(0).segment(first, t - first + 1);
        const double sd = std::sqrt((w.array() - w.mean()).square().sum() / (w.size() - 1));
        EXPECT_NEAR(v(t, 0), sd, 1e-12);
    }
}

TEST(CleanCorrelation, NoisePanelIsNearIdentity) {
    const auto c = clean_correlation(noise_panel(4, 2000, 20));
    for (Eigen::Index i = 0; i < 20; ++i) {
        EXPECT_NEAR(c.correlation(i, i), 1.0, 1e-12);
        for (Eigen::Index j = 0; j < 20; ++j) {
            if (i != j) EXPECT_LT(std::fabs(c.correlation(i, j)), 0.05);
        }
    }
    EXPECT_NEAR(c.noise_edge, std::pow(1.0 + std::sqrt(20.0 / 2000.0), 2), 1e-12);
}

TEST(CleanCorrelation, MarketModeIsPreserved) {
    const auto r = noise_panel(5, 500, 30, 0.01);
    const auto c = clean_correlation(r);
    // Raw leading eigenvalue is about 1 + 29 * 0.5 and stays above the noise edge.
    EXPECT_GT(c.raw_eigenvalues(29), 10.0);
    EXPECT_DOUBLE_EQ(c.cleaned_eigenvalues(29), c.raw_eigenvalues(29));
    EXPECT_NEAR(c.cleaned_eigenvalues.sum(), c.raw_eigenvalues.sum(), 1e-9);
    const Eigen::VectorXd v = c.leading_eigenvector();
    EXPECT_NEAR(v.norm(), 1.0, 1e-12);
    EXPECT_GE(v.sum(), 0.0);
    for (Eigen::Index i = 0; i < 30; ++i) EXPECT_NEAR(v(i), 1.0 / std::sqrt(30.0), 0.03);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(c.correlation);
    EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-12);
    EXPECT_LT((c.correlation - c.correlation.transpose()).cwiseAbs().maxCoeff(), 1e-15);
    const Eigen::MatrixXd cov = c.covariance();
    EXPECT_NEAR(cov(0, 0), c.vols(0) * c.vols(0), 1e-18);
}

TEST(CleanCorrelation, SingleAssetAndErrors) {
    const auto one = clean_correlation(noise_panel(6, 100, 1));
    ASSERT_EQ(one.correlation.rows(), 1);
    EXPECT_DOUBLE_EQ(one.correlation(0, 0), 1.0);
    EXPECT_THROW(clean_correlation(noise_panel(6, 59, 3)), std::invalid_argument);
    Eigen::MatrixXd flat = noise_panel(7, 100, 3);
    flat.col(1).setConstant(0.01);
    try {
        clean_correlation(flat, {"A", "FLAT", "C"});
        FAIL();
    } catch (const DegenerateSeriesError& e) {
        EXPECT_NE(std::string(e.what()).find("FLAT"), std::string::npos);
    }
}

TEST(PredictedVol, Annualizes) {
    Eigen::MatrixXd cov(2, 2);
    cov << 1e-4, 0.0, 0.0, 4e-4;
    Eigen::VectorXd w(2);
    w << 1.0, -1.0;
    EXPECT_NEAR(predicted_vol(w, cov), std::sqrt(252.0 * 5e-4), 1e-15);
}
