// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "fixtures.hpp"
#include "yieldgan/ingest.hpp"

namespace {

namespace fs = std::filesystem;
using ygan::ingest::read_text_file;
using ygan::ingest::write_text_file;

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = ygan::testing::temp_dir("cli");
    ASSERT_EQ(std::system((std::string(YGAN_FIXTURE_PATH) + " " + dir_.string() +
                           " 1990-01-01 2005-12-31 0.02 5")
                              .c_str()),
              0);
    write_text_file(dir_ / "gan.json",
                    R"({"T": 30, "S": 5, "attr_hidden": [8], "meta_hidden": [8],
                        "lstm_hidden": [8], "critic_hidden": [16], "aux_hidden": [8],
                        "epochs": 1, "batch_size": 20, "diversity_probe": 4})");
  }
  static void TearDownTestSuite() { fs::remove_all(dir_); }

  // Exit status of the tool; output goes to a log file in the work dir.
  static int run(const std::string& args) {
    const auto cmd = std::string(YGAN_CLI_PATH) + " " + args + " >>" +
                     (dir_ / "cli.log").string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }
  static std::string p(const std::string& name) { return (dir_ / name).string(); }

  void ingest() {
    if (fs::exists(dir_ / "panel.csv")) return;
    ASSERT_EQ(run("ingest --y1 " + p("DGS1.csv") + " --y10 " + p("DGS10.csv") + " --rec " +
                  p("USRECD.csv") + " --out " + p("panel.csv")),
              0);
  }

  static fs::path dir_;
};

fs::path Cli::dir_;

TEST_F(Cli, IngestWritesPanelAndManifest) {
  ingest();
  EXPECT_TRUE(fs::exists(dir_ / "panel.csv.manifest.json"));
  const auto panel = ygan::ingest::read_panel(dir_ / "panel.csv");
  EXPECT_LT(panel.size(), ygan::testing::weekday_count("1990-01-01", "2005-12-31"));
  const auto m = nlohmann::json::parse(read_text_file(dir_ / "panel.csv.manifest.json"));
  EXPECT_EQ(m["command"], "ingest");
  EXPECT_TRUE(m.contains("config_hash"));
}

TEST_F(Cli, GanPipelineIsDeterministic) {
  ingest();
  ASSERT_EQ(run("make-samples --panel " + p("panel.csv") + " --kind gan --window 30 --out " +
                p("seg.json")),
            0);
  for (const char* tag : {"a", "b"}) {
    ASSERT_EQ(run("train-gan --config " + p("gan.json") + " --data " + p("seg.json") +
                  " --seed 9 --max-iterations 5 --out " + p(std::string("gan_") + tag + ".ckpt")),
              0);
    ASSERT_EQ(run("generate --ckpt " + p(std::string("gan_") + tag + ".ckpt") +
                  " --n 25 --seed 2 --out " + p(std::string("syn_") + tag + ".json")),
              0);
  }
  EXPECT_EQ(read_text_file(dir_ / "gan_a.ckpt"), read_text_file(dir_ / "gan_b.ckpt"));
  EXPECT_EQ(read_text_file(dir_ / "gan_a.ckpt.history.csv"),
            read_text_file(dir_ / "gan_b.ckpt.history.csv"));
  EXPECT_EQ(read_text_file(dir_ / "syn_a.csv"), read_text_file(dir_ / "syn_b.csv"));
  EXPECT_EQ(run("fidelity --real " + p("seg.json") + " --synth " + p("syn_a.json") +
                " --max-lag 10 --out " + p("fid")),
            0);
  EXPECT_TRUE(fs::exists(dir_ / "fid/report.json"));
  EXPECT_TRUE(fs::exists(dir_ / "fid/manifest.json"));
}

TEST_F(Cli, ForecastPipeline) {
  ingest();
  ASSERT_EQ(run("make-samples --panel " + p("panel.csv") +
                " --kind forecast --window 10 --horizon 1 --end 2003-12-31 --out " + p("f.json")),
            0);
  ASSERT_EQ(run("train-forecaster --data " + p("f.json") +
                " --horizon 1 --epochs 1 --seed 1 --out " + p("f.ckpt") +
                " --config " + p("fcfg.json")),
            3);  // config file not written yet
  write_text_file(dir_ / "fcfg.json", R"({"hidden": [4, 4], "batch_size": 256})");
  ASSERT_EQ(run("train-forecaster --data " + p("f.json") + " --horizon 1 --epochs 1 --out " +
                p("f.ckpt") + " --config " + p("fcfg.json")),
            0);
  EXPECT_EQ(run("train-forecaster --data " + p("f.json") + " --horizon 15 --out " +
                p("f15.ckpt") + " --config " + p("fcfg.json")),
            2);
  ASSERT_EQ(run("forecast --ckpt " + p("f.ckpt") + " --panel " + p("panel.csv") +
                " --start 2004-01-02 --end 2005-12-30 --out " + p("fc.csv")),
            0);
  EXPECT_EQ(read_text_file(dir_ / "fc.csv").substr(0, 39),
            std::string("date,y1_pred,y10_pred,y1_true,y10_true\n"));
  ASSERT_EQ(run("evaluate-forecasts --forecasts " + p("fc.csv") + " --out " + p("fe.json")), 0);
  const auto j = nlohmann::json::parse(read_text_file(dir_ / "fe.json"));
  EXPECT_TRUE(j.dump().find("rmse") != std::string::npos);
}

TEST_F(Cli, ClassifierPipeline) {
  ingest();
  ASSERT_EQ(run("make-samples --panel " + p("panel.csv") +
                " --kind classify --window 30 --lookahead 60 --end 1999-12-31 --out " +
                p("c.json")),
            0);
  ASSERT_EQ(run("train-classifier --kind logistic --lambda 0.1 --data " + p("c.json") +
                " --out " + p("lr.ckpt")),
            0);
  ASSERT_EQ(run("classify --ckpt " + p("lr.ckpt") + " --panel " + p("panel.csv") +
                " --start 2000-01-03 --end 2004-12-31 --out " + p("probs.csv")),
            0);
  ASSERT_EQ(run("evaluate-classifier --probs " + p("probs.csv") + " --panel " + p("panel.csv") +
                " --lookahead 60 --out " + p("roc")),
            0);
  const auto roc = nlohmann::json::parse(read_text_file(dir_ / "roc/roc.json"));
  EXPECT_GE(roc["auc"].get<double>(), 0.0);
  EXPECT_LE(roc["auc"].get<double>(), 1.0);
  ASSERT_EQ(run("train-classifier --kind lstm --epochs 1 --data " + p("c.json") + " --out " +
                p("lstm.ckpt")),
            0);
  EXPECT_EQ(run("classify --ckpt " + p("lstm.ckpt") + " --panel " + p("panel.csv") +
                " --start 2000-01-03 --end 2000-12-29 --out " + p("probs2.csv")),
            0);
}

TEST_F(Cli, ExitCodes) {
  ingest();
  EXPECT_EQ(run("--bogus"), 2);
  EXPECT_EQ(run("ingest --y1 " + p("nope.csv") + " --y10 " + p("DGS10.csv") + " --rec " +
                p("USRECD.csv") + " --out " + p("x.csv")),
            3);
  EXPECT_EQ(run("ingest --y1 " + p("DGS1.csv") + " --y10 " + p("DGS10.csv") + " --rec " +
                p("USRECD.csv") + " --missing sometimes --out " + p("x.csv")),
            2);
  write_text_file(dir_ / "badkey.json", R"({"T": 30, "no_such_key": 1})");
  EXPECT_EQ(run("train-gan --config " + p("badkey.json") + " --data " + p("panel.csv") +
                " --out " + p("g.ckpt")),
            2);
  write_text_file(dir_ / "junk.ckpt", "YGANCKPT garbage");
  EXPECT_EQ(run("generate --ckpt " + p("junk.ckpt") + " --n 3 --out " + p("g.json")), 3);
  write_text_file(dir_ / "zero.csv",
                  "date,y1_pred,y10_pred,y1_true,y10_true\n2020-01-02,1,2,0,2\n");
  EXPECT_EQ(run("evaluate-forecasts --mape-include-all --forecasts " + p("zero.csv") +
                " --out " + p("z.json")),
            4);
}

}  // namespace
