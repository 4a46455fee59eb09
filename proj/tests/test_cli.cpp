#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#ifndef OPFKIT_BIN
#define OPFKIT_BIN "opfkit"
#endif
#ifndef OPF_DATA_DIR
#define OPF_DATA_DIR "data"
#endif

namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

struct CliResult {
    int exit_code;
    std::string stdout_text;
};

CliResult run(const std::string& args, const fs::path& out_dir) {
    const fs::path log = out_dir / "stdout.txt";
    const std::string cmd = std::string(OPFKIT_BIN) + " " + args + " --out " +
                            out_dir.string() + " > " + log.string() + " 2>&1";
    const int rc = std::system(cmd.c_str());
    std::ifstream in(log);
    std::stringstream ss;
    ss << in.rdbuf();
    return {WEXITSTATUS(rc), ss.str()};
}

fs::path fresh_dir(const std::string& tag) {
    const fs::path p = fs::temp_directory_path() / ("opfkit-test-" + tag);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string data(const char* name) { return std::string(OPF_DATA_DIR) + "/" + name; }

ordered_json read_report(const fs::path& p) {
    std::ifstream in(p);
    REQUIRE(in.good());
    return ordered_json::parse(in);
}

std::string strip_timestamp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.find("timestamp_utc") != std::string::npos) continue;
        out << line << "\n";
    }
    return out.str();
}

}  // namespace

TEST_SUITE("cli") {
    TEST_CASE("samples surfaces the explicit bound") {
        const fs::path dir = fresh_dir("samples");
        const CliResult r = run("samples --eps 0.1 --beta 1e-6 --nu 10 --bound explicit", dir);
        CHECK(r.exit_code == 0);
        CHECK(r.stdout_text.find("361") != std::string::npos);
        const ordered_json rep = read_report(dir / "samples.json");
        CHECK(rep["result"]["n"] == 361);
        CHECK(rep["result"]["n_exact"] <= 361);
    }

    TEST_CASE("acopf on the radial case reports rank one") {
        const fs::path dir = fresh_dir("acopf");
        const CliResult r = run("acopf --case " + data("case3_radial.json"), dir);
        CHECK(r.exit_code == 0);
        const ordered_json rep = read_report(dir / "acopf.json");
        CHECK(rep["result"]["rank"]["rank_one"] == true);
        CHECK(rep["result"]["rank"]["ratio"].get<double>() <= 1e-5);
        // reproducibility envelope: full config + input hash embedded
        CHECK(rep.contains("config"));
        CHECK(rep["config"]["case"].get<std::string>() == data("case3_radial.json"));
        CHECK(!rep["inputs"]["case_hash"].get<std::string>().empty());
    }

    TEST_CASE("swc then validate with the same train seed exits 2") {
        const fs::path dir = fresh_dir("seedreuse");
        const CliResult sw =
            run("swc --case " + data("case3_uncertain.json") + " --model " +
                    data("model3_box.json") + " --eps 0.2 --beta 0.05 --train-seed 9",
                dir);
        REQUIRE(sw.exit_code == 0);
        const CliResult bad = run("validate --case " + data("case3_uncertain.json") +
                                      " --model " + data("model3_box.json") + " --decision " +
                                      (dir / "swc.json").string() +
                                      " --samples 50 --validate-seed 9",
                                  dir);
        CHECK(bad.exit_code == 2);
        const CliResult good = run("validate --case " + data("case3_uncertain.json") +
                                       " --model " + data("model3_box.json") + " --decision " +
                                       (dir / "swc.json").string() +
                                       " --samples 50 --validate-seed 10",
                                   dir);
        CHECK(good.exit_code == 0);
        const ordered_json rep = read_report(dir / "validate.json");
        CHECK(rep["result"]["samples"] == 50);
    }

    TEST_CASE("reports are byte-stable modulo the timestamp") {
        const fs::path d1 = fresh_dir("golden1");
        const fs::path d2 = fresh_dir("golden2");
        REQUIRE(run("dcopf --case " + data("case3_radial.json"), d1).exit_code == 0);
        REQUIRE(run("dcopf --case " + data("case3_radial.json"), d2).exit_code == 0);
        const std::string a = strip_timestamp(d1 / "dcopf.json");
        std::string b = strip_timestamp(d2 / "dcopf.json");
        // normalize the differing out_dir config entry
        size_t pos;
        std::string a2 = a;
        while ((pos = a2.find(d1.string())) != std::string::npos) {
            a2.replace(pos, d1.string().size(), "OUT");
        }
        while ((pos = b.find(d2.string())) != std::string::npos) {
            b.replace(pos, d2.string().size(), "OUT");
        }
        CHECK(a2 == b);
    }

    TEST_CASE("infeasible case maps to exit 1, missing file to exit 2") {
        const fs::path dir = fresh_dir("exitcodes");
        // demand far beyond capacity
        const CliResult inf =
            run("ed --case " + data("case3_radial.json") + " --demand-mw 10000", dir);
        CHECK(inf.exit_code == 1);
        const CliResult missing = run("ed --case /nonexistent/case.json", dir);
        CHECK(missing.exit_code == 2);
        const CliResult usage = run("ed", dir);
        CHECK(usage.exit_code == 2);
    }

    TEST_CASE("point-mass swc reproduces the nominal acopf objective") {
        const fs::path dir = fresh_dir("pointmass");
        REQUIRE(run("acopf --case " + data("case3_radial.json"), dir).exit_code == 0);
        REQUIRE(run("swc --case " + data("case3_radial.json") + " --model " +
                        data("model3_point.json") + " --eps 0.2 --beta 0.05 --train-seed 1",
                    dir)
                    .exit_code == 0);
        const double nominal =
            read_report(dir / "acopf.json")["result"]["objective"].get<double>();
        const double gamma = read_report(dir / "swc.json")["result"]["gamma"].get<double>();
        CHECK(std::abs(gamma - nominal) <= 1e-4 * (1.0 + std::abs(nominal)));
    }

    TEST_CASE("matpower import drives the pf subcommand") {
        const fs::path dir = fresh_dir("matpower");
        const CliResult r = run("pf --case " + data("case3_radial.m"), dir);
        CHECK(r.exit_code == 0);
        const ordered_json rep = read_report(dir / "pf.json");
        CHECK(rep["result"]["iterations"].get<int>() >= 1);
    }

    TEST_CASE("scenario emission writes a loadable json-lines file") {
        const fs::path dir = fresh_dir("emit");
        const fs::path scen = dir / "scen.jsonl";
        const CliResult r = run("samples --eps 0.2 --beta 0.05 --case " +
                                    data("case3_uncertain.json") + " --model " +
                                    data("model3_box.json") + " --seed 3 --emit-scenarios " +
                                    scen.string(),
                                dir);
        CHECK(r.exit_code == 0);
        std::ifstream in(scen);
        REQUIRE(in.good());
        std::string header;
        std::getline(in, header);
        CHECK(header.find("scenario-set") != std::string::npos);
    }

    TEST_CASE("gamma curve csv is emitted for external plotting") {
        const fs::path dir = fresh_dir("curve");
        const CliResult r =
            run("swc --case " + data("case3_uncertain.json") + " --model " +
                    data("model3_box.json") +
                    " --eps 0.2 --beta 0.05 --train-seed 5 --gamma-curve 5,10,20",
                dir);
        CHECK(r.exit_code == 0);
        std::ifstream csv(dir / "gamma_curve.csv");
        REQUIRE(csv.good());
        std::string line;
        std::getline(csv, line);
        CHECK(line == "n_samples,gamma");
        int rows = 0;
        while (std::getline(csv, line)) rows += line.empty() ? 0 : 1;
        CHECK(rows == 3);
    }
}
