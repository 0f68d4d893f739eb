#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "spotvol/backtest.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct RunResult {
    int code = -1;
    std::string err;
};

class CliTest : public ::testing::Test {
protected:
    static fs::path dir;

    static RunResult run(const std::string& args) {
        const fs::path err = dir / "stderr.txt";
        const std::string cmd = std::string(SPOTVOL_CLI_PATH) + " " + args + " > " + (dir / "stdout.txt").string() +
                                " 2> " + err.string();
        const int status = std::system(cmd.c_str());
        return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(err)};
    }

    static fs::path write_config(const std::string& name, const json& doc) {
        const fs::path p = dir / name;
        std::ofstream(p) << doc.dump(2);
        return p;
    }

    static json base_config(const std::string& model) {
        const std::string data = model == "baseline" ? "plain" : "data";
        return {{"seed", 11},
                {"datasets", {{{"zone", "Zone1"}, {"prices", data + "/prices.csv"}, {"weather", data + "/weather.csv"}, {"hours", {11}}}}},
                {"model", model},
                {"sampler", {{"chains", 4}, {"warmup", 1000}, {"draws", 1000}}},
                {"fit", {{"train_days", 150}}},
                {"forecast", {{"horizon", 7}, {"n_draws", 200}}},
                {"folds", {{"total_days", 240}, {"train_days", 150}, {"test_days", 90}}},
                {"workers", 1}};
    }

    static void SetUpTestSuite() {
        dir = spotvol::test::temp_dir("cli");
        const json synth = {{"seed", 4},
                            {"output_dir", "data"},
                            {"synth", {{"n_days", 260}, {"svx", {{"alpha", 0.3}, {"beta1", -4.0}, {"gamma", 5.0}}}}}};
        ASSERT_EQ(run("synth -c " + write_config("synth.json", synth).string()).code, 0);
        const json plain = {{"seed", 5}, {"output_dir", "plain"}, {"synth", {{"n_days", 260}}}};
        ASSERT_EQ(run("synth -c " + write_config("synth_plain.json", plain).string()).code, 0);

        // Single-hour random walk for the unit-root check.
        std::ofstream rw(dir / "rw.csv");
        rw << "date,hour,price\n";
        double level = 1000.0;
        const auto steps = spotvol::test::lcg_noise(77, 300);
        for (std::size_t d = 0; d < steps.size(); ++d) {
            level += 40.0 * steps[d];
            rw << spotvol::format_date(spotvol::Date{std::chrono::year{2020} / 1 / 1} + std::chrono::days(d)) << ",0,"
               << level << '\n';
        }
    }
};

fs::path CliTest::dir;

}  // namespace

TEST_F(CliTest, SynthWritesArchive) {
    EXPECT_TRUE(fs::exists(dir / "data" / "prices.csv"));
    EXPECT_TRUE(fs::exists(dir / "data" / "weather.csv"));
    EXPECT_TRUE(fs::exists(dir / "data" / "latent_h.csv"));
    const json manifest = json::parse(slurp(dir / "data" / "manifest.json"));
    EXPECT_EQ(manifest["command"], "synth");
    EXPECT_EQ(manifest["seed"], 4);
    EXPECT_EQ(manifest["outputs"].size(), 3u);
}

TEST_F(CliTest, FitIsDeterministicAndConverges) {
    const fs::path cfg = write_config("fit_svx.json", base_config("svx"));
    const RunResult a = run("fit -c " + cfg.string() + " -o " + (dir / "fit_a").string());
    ASSERT_EQ(a.code, 0) << a.err;
    const RunResult b = run("fit -c " + cfg.string() + " -o " + (dir / "fit_b").string());
    ASSERT_EQ(b.code, 0) << b.err;
    EXPECT_EQ(slurp(dir / "fit_a" / "fit.json"), slurp(dir / "fit_b" / "fit.json"));
    const json summary = json::parse(slurp(dir / "fit_a" / "fit_summary.json"));
    EXPECT_LT(summary["max_rhat"].get<double>(), 1.05);
    EXPECT_EQ(summary["family"], "svx");
    EXPECT_EQ(summary["n_obs"], 150);
    EXPECT_EQ(summary["raw_coefficients"].size(), 6u);
}

TEST_F(CliTest, SeedOverrideChangesFit) {
    const fs::path cfg = write_config("fit_seed.json", base_config("baseline"));
    ASSERT_EQ(run("fit -c " + cfg.string() + " -o " + (dir / "seed_a").string()).code, 0);
    ASSERT_EQ(run("fit -c " + cfg.string() + " --seed 12 -o " + (dir / "seed_b").string()).code, 0);
    EXPECT_NE(slurp(dir / "seed_a" / "fit.json"), slurp(dir / "seed_b" / "fit.json"));
    EXPECT_EQ(json::parse(slurp(dir / "seed_b" / "manifest.json"))["seed"], 12);
}

TEST_F(CliTest, MissingPricePathNamesKey) {
    json doc = base_config("svx");
    doc["datasets"][0].erase("prices");
    const RunResult r = run("fit -c " + write_config("no_prices.json", doc).string() + " -o " + (dir / "np").string());
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("datasets[0].prices"), std::string::npos) << r.err;
    EXPECT_FALSE(fs::exists(dir / "np"));
}

TEST_F(CliTest, MalformedConfigFailsBeforeWork) {
    std::ofstream(dir / "broken.json") << "{\"seed\": 1, \"datasets\": [";
    const RunResult r = run("cv -c " + (dir / "broken.json").string() + " -o " + (dir / "broken_out").string());
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("InvalidConfig"), std::string::npos);
    EXPECT_FALSE(fs::exists(dir / "broken_out"));
}

TEST_F(CliTest, ForecastHorizonRowsAndPrecision) {
    const fs::path cfg = write_config("fc_svx.json", base_config("svx"));
    ASSERT_EQ(run("fit -c " + cfg.string() + " -o " + (dir / "fc_fit").string()).code, 0);
    const RunResult r = run("forecast -c " + cfg.string() + " --fit " + (dir / "fc_fit" / "fit.json").string() + " -o " +
                            (dir / "fc").string());
    ASSERT_EQ(r.code, 0) << r.err;
    std::istringstream csv(slurp(dir / "fc" / "forecast.csv"));
    std::string line;
    std::getline(csv, line);
    EXPECT_EQ(line.rfind("date,mean,ci_low,ci_high,vol_mean,vol_low,vol_high", 0), 0u);
    const json js = json::parse(slurp(dir / "fc" / "forecast.json"));
    std::size_t rows = 0;
    while (std::getline(csv, line)) {
        const auto a = line.find(',');
        const auto b = line.find(',', a + 1);
        EXPECT_EQ(std::stod(line.substr(a + 1, b - a - 1)), js["mean"][rows].get<double>());
        ++rows;
    }
    EXPECT_EQ(rows, 7u);
}

TEST_F(CliTest, BaselineFitRejectedForSvxForecast) {
    const fs::path base = write_config("fit_base.json", base_config("baseline"));
    ASSERT_EQ(run("fit -c " + base.string() + " -o " + (dir / "base_fit").string()).code, 0);
    const fs::path svx = write_config("want_svx.json", base_config("svx"));
    const RunResult r = run("forecast -c " + svx.string() + " --fit " + (dir / "base_fit" / "fit.json").string() +
                            " -o " + (dir / "mismatch").string());
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("IncompatibleFit"), std::string::npos) << r.err;
}

TEST_F(CliTest, MiniPlanCrossValidation) {
    const fs::path cfg = write_config("cv.json", base_config("svx"));
    const RunResult r = run("cv -c " + cfg.string() + " -o " + (dir / "cv").string());
    ASSERT_EQ(r.code, 0) << r.err;
    const json summary = json::parse(slurp(dir / "cv" / "cv_summary.json"));
    EXPECT_EQ(summary["plan"]["folds"], 1);
    ASSERT_EQ(summary["combinations"].size(), 2u);
    for (const auto& c : summary["combinations"]) {
        EXPECT_EQ(c["folds"].size(), 1u);
        EXPECT_EQ(c["succeeded"], 1);
        EXPECT_EQ(c["mean_mae"], c["folds"][0]["mae"]);
    }
    EXPECT_EQ(summary["mae"]["baseline"].size(), 1u);
    std::istringstream csv(slurp(dir / "cv" / "cv_folds.csv"));
    std::string line;
    int rows = -1;
    while (std::getline(csv, line)) ++rows;
    EXPECT_EQ(rows, 2);
}

TEST_F(CliTest, DiagnoseRandomWalkIsNonStationary) {
    const json doc = {{"seed", 1}, {"datasets", {{{"prices", "rw.csv"}, {"hours", {0}}}}}};
    const RunResult r = run("diagnose -c " + write_config("diag.json", doc).string() + " -o " + (dir / "diag").string());
    ASSERT_EQ(r.code, 0) << r.err;
    const json report = json::parse(slurp(dir / "diag" / "diagnose.json"));
    EXPECT_EQ(report["adf"]["conclusion"], "NonStationary");
    EXPECT_TRUE(fs::exists(dir / "diag" / "pacf.csv"));
}

TEST_F(CliTest, DiagnoseWithSvxFitWritesInterpretation) {
    const fs::path cfg = write_config("diag_svx.json", base_config("svx"));
    ASSERT_EQ(run("fit -c " + cfg.string() + " -o " + (dir / "diag_fit").string()).code, 0);
    const RunResult r = run("diagnose -c " + cfg.string() + " --fit " + (dir / "diag_fit" / "fit.json").string() +
                            " -o " + (dir / "diag_svx").string());
    ASSERT_TRUE(r.code == 0 || r.code == 2) << r.err;
    for (const char* name : {"pd_temperature.csv", "ice_weekday.csv", "residuals.csv", "kmeans.csv"}) {
        EXPECT_TRUE(fs::exists(dir / "diag_svx" / name)) << name;
    }
}

TEST_F(CliTest, RerunFromManifestIsByteIdentical) {
    const fs::path cfg = write_config("rerun.json", base_config("svx"));
    ASSERT_EQ(run("fit -c " + cfg.string() + " -o " + (dir / "r_fit").string()).code, 0);
    ASSERT_EQ(run("report --fit " + (dir / "r_fit" / "fit.json").string() + " -o " + (dir / "r_report").string()).code, 0);
    for (const std::string name : {"r_fit", "r_report"}) {
        const fs::path again = dir / (name + "_again");
        ASSERT_EQ(run("rerun " + (dir / name / "manifest.json").string() + " -o " + again.string()).code, 0);
        std::size_t files = 0;
        for (const auto& entry : fs::directory_iterator(dir / name)) {
            EXPECT_EQ(slurp(entry.path()), slurp(again / entry.path().filename())) << entry.path();
            ++files;
        }
        EXPECT_GE(files, 2u);
    }
}

TEST_F(CliTest, UnknownSubcommandFails) { EXPECT_EQ(run("explode").code, 1); }
