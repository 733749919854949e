#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "skolr/checkpoint.hpp"
#include "skolr/error.hpp"
#include "skolr/rng.hpp"

using namespace skolr;

namespace {

class CheckpointTest : public ::testing::Test {
protected:
    void SetUp() override
    {
        dir_ = std::filesystem::temp_directory_path() /
               ("skolr_ckpt_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        std::filesystem::create_directories(dir_);
    }
    void TearDown() override { std::filesystem::remove_all(dir_); }

    std::filesystem::path dir_;
};

Checkpoint sample_checkpoint()
{
    Checkpoint ckpt;
    ckpt.config.lookback = 24;
    ckpt.config.horizon = 8;
    ckpt.config.patch = 4;
    ckpt.config.branches = 3;
    ckpt.config.dynamic_dim = 6;
    ckpt.config.ffn_layers = 2;
    ckpt.config.dropout = 0.1;
    ckpt.config.channels = 2;
    Rng rng(5);
    ckpt.params = SkolrParams::initialize(ckpt.config, rng);
    for (auto& b : ckpt.params.branches) b.gate = oracle::random_tensor({13}, rng, -1e-300, 1e300);
    ckpt.metadata["train_config_hash"] = "0123456789abcdef";
    ckpt.metadata["seed"] = "42";
    ckpt.extras["scaler.mean"] = Tensor::vector({0.1, -2.5});
    ckpt.extras["scaler.std"] = Tensor::vector({1.0 / 3.0, 7.0});
    return ckpt;
}

}  // namespace

TEST_F(CheckpointTest, RoundtripIsBitExact)
{
    const Checkpoint ckpt = sample_checkpoint();
    save_checkpoint(dir_ / "a.ckpt", ckpt);
    const Checkpoint back = load_checkpoint(dir_ / "a.ckpt", ckpt.config);
    EXPECT_EQ(back.config, ckpt.config);
    EXPECT_EQ(back.metadata, ckpt.metadata);
    EXPECT_EQ(back.extras, ckpt.extras);
    const auto a = ckpt.params.named();
    const auto b = back.params.named();
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].first, b[i].first);
        EXPECT_EQ(*a[i].second, *b[i].second) << a[i].first;
    }
}

TEST_F(CheckpointTest, MismatchedConfigIsRefusedWithFieldName)
{
    const Checkpoint ckpt = sample_checkpoint();
    save_checkpoint(dir_ / "a.ckpt", ckpt);
    ModelConfig other = ckpt.config;
    other.dynamic_dim = 7;
    try {
        load_checkpoint(dir_ / "a.ckpt", other);
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("D"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("stored 6"), std::string::npos);
    }
}

TEST_F(CheckpointTest, MissingFileIsDataError)
{
    EXPECT_THROW(load_checkpoint(dir_ / "missing.ckpt"), DataError);
}

TEST_F(CheckpointTest, GarbageIsFormatError)
{
    std::ofstream(dir_ / "bad.ckpt") << "not a checkpoint";
    EXPECT_THROW(load_checkpoint(dir_ / "bad.ckpt"), FormatError);
}

TEST_F(CheckpointTest, TruncationIsFormatError)
{
    save_checkpoint(dir_ / "a.ckpt", sample_checkpoint());
    const auto size = std::filesystem::file_size(dir_ / "a.ckpt");
    std::filesystem::resize_file(dir_ / "a.ckpt", size - 9);
    EXPECT_THROW(load_checkpoint(dir_ / "a.ckpt"), FormatError);
}
