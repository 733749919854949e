#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "skolr/error.hpp"
#include "skolr/fft.hpp"
#include "skolr/rng.hpp"
#include "skolr/tensor.hpp"

using namespace skolr;

TEST(Matmul, IdentityLeavesMatrixUnchanged)
{
    const Tensor m = Tensor::matrix({{1, 2}, {3, 4}});
    EXPECT_EQ(matmul(Tensor::identity(2), m), m);
}

TEST(Matmul, RowTimesColumnIsDotProduct)
{
    const Tensor out = matmul(Tensor::matrix({{1, 2}}), Tensor::matrix({{3}, {4}}));
    ASSERT_EQ(out.shape(), (Shape{1, 1}));
    EXPECT_EQ(out[0], 11.0);
}

TEST(Matmul, MatchesTripleLoop)
{
    Rng rng(11);
    const Tensor a = oracle::random_tensor({3, 4}, rng);
    const Tensor b = oracle::random_tensor({4, 2}, rng);
    EXPECT_LE(max_abs_diff(matmul(a, b), oracle::matmul(a, b)), 1e-12);
}

TEST(Matmul, ShapeMismatchNamesBothShapes)
{
    try {
        matmul(Tensor({2, 3}), Tensor({2, 3}));
        FAIL();
    } catch (const DimensionError& e) {
        EXPECT_NE(std::string(e.what()).find("[2x3] x [2x3]"), std::string::npos);
    }
}

TEST(Matmul, AssociativeOnRandomTriples)
{
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t m = 1 + rng.below(6), k = 1 + rng.below(6), n = 1 + rng.below(6), p = 1 + rng.below(6);
        const Tensor a = oracle::random_tensor({m, k}, rng);
        const Tensor b = oracle::random_tensor({k, n}, rng);
        const Tensor c = oracle::random_tensor({n, p}, rng);
        EXPECT_LE(max_abs_diff(matmul(matmul(a, b), c), matmul(a, matmul(b, c))), 1e-9);
    }
}

TEST(Tensor, DataLengthMustMatchShape)
{
    EXPECT_THROW(Tensor({2, 2}, {1.0, 2.0, 3.0}), DimensionError);
}

TEST(Rfft, DeltaGivesFlatSpectrum)
{
    const auto s = rfft(std::vector<double>{1, 0, 0, 0});
    ASSERT_EQ(s.bins.size(), 3u);
    for (const auto& b : s.bins) {
        EXPECT_EQ(b.real(), 1.0);
        EXPECT_EQ(b.imag(), 0.0);
    }
}

TEST(Rfft, ConstantIsDcOnly)
{
    const double c = 2.5;
    const auto s = rfft(std::vector<double>{c, c, c, c});
    ASSERT_EQ(s.bins.size(), 3u);
    EXPECT_NEAR(s.bins[0].real(), 4 * c, 1e-15);
    EXPECT_EQ(s.bins[0].imag(), 0.0);
    EXPECT_NEAR(std::abs(s.bins[1]), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(s.bins[2]), 0.0, 1e-15);
}

TEST(Rfft, CosineHitsBinOne)
{
    std::vector<double> x(8);
    for (std::size_t k = 0; k < 8; ++k) x[k] = std::cos(2.0 * std::numbers::pi * k / 8.0);
    const auto s = rfft(x);
    const auto ref = oracle::dft_half(x);
    ASSERT_EQ(s.bins.size(), ref.size());
    for (std::size_t f = 0; f < ref.size(); ++f) EXPECT_LE(std::abs(s.bins[f] - ref[f]), 1e-12);
    EXPECT_NEAR(s.bins[1].real(), 4.0, 1e-12);
    EXPECT_NEAR(s.bins[1].imag(), 0.0, 1e-12);
    for (std::size_t f : {0u, 2u, 3u, 4u}) EXPECT_NEAR(std::abs(s.bins[f]), 0.0, 1e-12);
}

TEST(Rfft, EmptySignalIsDomainError)
{
    EXPECT_THROW(rfft(std::vector<double>{}), DimensionError);
}

TEST(Rfft, MatchesDirectSumForAwkwardLengths)
{
    Rng rng(3);
    for (std::size_t n : {1u, 2u, 3u, 7u, 12u, 30u, 49u, 97u, 96u, 720u}) {
        std::vector<double> x(n);
        for (double& v : x) v = rng.uniform(-1, 1);
        const auto s = rfft(x);
        const auto ref = oracle::dft_half(x);
        for (std::size_t f = 0; f < ref.size(); ++f) EXPECT_LE(std::abs(s.bins[f] - ref[f]), 1e-9) << n;
    }
}

TEST(Irfft, RoundtripSmallVector)
{
    const std::vector<double> x{3, 1, 4, 1, 5, 9};
    const Tensor back = irfft(rfft(x));
    for (std::size_t k = 0; k < x.size(); ++k) EXPECT_NEAR(back[k], x[k], 1e-10);
}

TEST(Irfft, DcOnlySpectrum)
{
    const double c = -1.75;
    ComplexSpectrum s{{{4 * c, 0}, {0, 0}, {0, 0}}, 4};
    const Tensor x = irfft(s);
    for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(x[k], c, 1e-15);
}

TEST(Irfft, MatchesDirectInverseForOddLength)
{
    Rng rng(17);
    std::vector<double> x(7);
    for (double& v : x) v = rng.uniform(-2, 2);
    const auto s = rfft(x);
    const auto ref = oracle::idft_half(s.bins, 7);
    const Tensor back = irfft(s);
    for (std::size_t k = 0; k < 7; ++k) {
        EXPECT_NEAR(back[k], ref[k], 1e-10);
        EXPECT_NEAR(back[k], x[k], 1e-10);
    }
}

TEST(Irfft, BinCountMustMatchLength)
{
    ComplexSpectrum s{{{1, 0}, {0, 0}}, 6};
    EXPECT_THROW(irfft(s), FormatError);
}

TEST(FftProperties, RoundtripAndParsevalForLengthsUpTo64)
{
    Rng rng(2024);
    for (std::size_t n = 1; n <= 64; ++n) {
        std::vector<double> x(n);
        for (double& v : x) v = rng.uniform(-3, 3);
        const auto s = rfft(x);
        const Tensor back = irfft(s);
        double energy = 0.0, spectral = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            EXPECT_NEAR(back[k], x[k], 1e-10) << "length " << n;
            energy += x[k] * x[k];
        }
        for (std::size_t f = 0; f < s.bins.size(); ++f) {
            const bool edge = f == 0 || (n % 2 == 0 && f == n / 2);
            spectral += (edge ? 1.0 : 2.0) * std::norm(s.bins[f]);
        }
        EXPECT_NEAR(energy, spectral / static_cast<double>(n), 1e-9) << "length " << n;
        // irfft then rfft is also the identity on valid half spectra.
        const auto again = rfft(back);
        for (std::size_t f = 0; f < s.bins.size(); ++f) EXPECT_LE(std::abs(again.bins[f] - s.bins[f]), 1e-10);
    }
}

TEST(RealDftMatrices, AgreeWithTransform)
{
    Rng rng(8);
    const std::size_t n = 10;
    const auto m = real_dft_matrices(n);
    const Tensor x = oracle::random_tensor({1, n}, rng);
    const Tensor re = matmul(x, m->forward_re), im = matmul(x, m->forward_im);
    const auto s = rfft(x.values());
    for (std::size_t f = 0; f < s.bins.size(); ++f) {
        EXPECT_NEAR(re[f], s.bins[f].real(), 1e-12);
        EXPECT_NEAR(im[f], s.bins[f].imag(), 1e-12);
    }
    const Tensor back = add(matmul(re, m->inverse_re), matmul(im, m->inverse_im));
    EXPECT_LE(max_abs_diff(back, x), 1e-12);
}
