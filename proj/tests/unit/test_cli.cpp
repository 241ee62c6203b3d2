// Copyright Contributors to the tnrf project
// SPDX-License-Identifier: Apache-2.0

#include "cli.h"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out, err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "tnrf");
    std::vector<const char *> argv;
    for (auto &a : args)
        argv.push_back(a.c_str());
    std::ostringstream out, err;
    int code = tnrf::cli::run(int(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string &name) {
    auto p = fs::temp_directory_path() / ("tnrf_cli_" + name);
    fs::remove_all(p);
    return p;
}

std::vector<std::string> tiny_sim(const fs::path &out) {
    return {"simulate", "--views", "2", "--test-views", "1", "--width", "8", "--height", "8",
            "--fx", "16", "--bins", "300", "--bin-ps", "16", "--t0-ps", "5000",
            "--counts-target", "300", "--footprint-samples", "2", "--out", out.string()};
}

}  // namespace

TEST(Cli, HelpAndUsageErrors) {
    auto help = run({"--help"});
    EXPECT_EQ(help.code, 0);
    EXPECT_NE(help.out.find("simulate"), std::string::npos);

    auto bad = run({"simulate", "--no-such-flag", "--out", "x"});
    EXPECT_EQ(bad.code, 1);
    EXPECT_NE(bad.err.find("--no-such-flag"), std::string::npos);

    EXPECT_EQ(run({"train"}).code, 1);
    EXPECT_EQ(run({"simulate", "--channels", "2", "--out", "x"}).code, 1);
}

TEST(Cli, DataErrors) {
    auto missing = run({"inspect", "/nonexistent/tnrf/data"});
    EXPECT_EQ(missing.code, 2);
    EXPECT_NE(missing.err.find("error:"), std::string::npos);

    auto dir = scratch("garbage");
    fs::create_directories(dir);
    std::ofstream(dir / "bad.trns") << "not a transient";
    EXPECT_EQ(run({"inspect", (dir / "bad.trns").string()}).code, 2);
    fs::remove_all(dir);
}

TEST(Cli, SimulateInspectEvalRoundTrip) {
    auto data = scratch("data");
    auto sim = run(tiny_sim(data));
    ASSERT_EQ(sim.code, 0) << sim.err;
    EXPECT_TRUE(fs::exists(data / "meta.json"));
    for (int k = 0; k < 3; ++k) {
        EXPECT_TRUE(fs::exists(data / ("view_" + std::to_string(k) + "_noisy.trns")));
        EXPECT_TRUE(fs::exists(data / ("view_" + std::to_string(k) + "_clean.trns")));
    }

    auto insp = run({"inspect", data.string(), "--json"});
    ASSERT_EQ(insp.code, 0) << insp.err;
    EXPECT_NE(insp.out.find("occupied_pixel_mean"), std::string::npos);

    auto report = data / "report.json";
    auto ev = run({"eval", "--pred", data.string(), "--ref", data.string(), "--out",
                   report.string()});
    ASSERT_EQ(ev.code, 0) << ev.err;
    EXPECT_NE(ev.out.find("mean psnr inf"), std::string::npos);
    EXPECT_TRUE(fs::exists(report));

    // Same seed, same bytes.
    auto again = scratch("data_again");
    ASSERT_EQ(run(tiny_sim(again)).code, 0);
    auto bytes = [](const fs::path &p) {
        std::ifstream f(p, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(f), {});
    };
    EXPECT_EQ(bytes(data / "view_0_noisy.trns"), bytes(again / "view_0_noisy.trns"));
    fs::remove_all(data);
    fs::remove_all(again);
}

TEST(Cli, TrainAndRender) {
    auto data = scratch("train_data");
    ASSERT_EQ(run(tiny_sim(data)).code, 0);
    auto model = scratch("model");
    auto tr = run({"train", "--data", data.string(), "--iters", "20", "--batch", "32", "--grid",
                   "8", "--log-every", "10", "--checkpoint-every", "10", "--out", model.string()});
    ASSERT_EQ(tr.code, 0) << tr.err;
    EXPECT_TRUE(fs::exists(model / "model.tnrf"));
    EXPECT_TRUE(fs::exists(model / "config.json"));
    EXPECT_TRUE(fs::exists(model / "metrics.ndjson"));

    auto renders = scratch("renders");
    auto rd = run({"render", "--model", model.string(), "--data", data.string(), "--out",
                   renders.string()});
    ASSERT_EQ(rd.code, 0) << rd.err;
    EXPECT_TRUE(fs::exists(renders / "view_2_clean.trns"));
    EXPECT_TRUE(fs::exists(renders / "view_2_depth.timg"));

    auto ev = run({"eval", "--pred", renders.string(), "--ref", data.string(), "--out",
                   (renders / "report.json").string()});
    EXPECT_EQ(ev.code, 0) << ev.err;
    EXPECT_NE(ev.out.find("view 2 psnr"), std::string::npos);

    EXPECT_EQ(run({"render", "--model", (data / "meta.json").string(), "--data", data.string(),
                   "--out", renders.string()})
                  .code,
              2);
    for (auto &d : {data, model, renders})
        fs::remove_all(d);
}
