#include "saucir/io.hpp"
#include "saucir/manifest.hpp"
#include "synthetic.hpp"

#include <doctest.h>
#include <httplib.h>

#include <csignal>
#include <filesystem>
#include <set>
#include <sys/wait.h>
#include <thread>
#include <unistd.h>

using namespace saucir;
using io::json;
namespace fs = std::filesystem;

namespace {

struct Result {
    int exit = -1;
    std::string err;
};

/// Scratch directory holding a 3-node and an 11-node synthetic dataset.
class Workspace {
public:
    Workspace() {
        root_ = fs::temp_directory_path() / ("saucir-cli-" + std::to_string(::getpid()));
        fs::remove_all(root_);
        fs::create_directories(root_ / "d3");
        fs::create_directories(root_ / "d11");
        testing::SyntheticSpec spec;
        testing::write_dataset(testing::make_synthetic(spec).dataset, (root_ / "d3").string());
        spec.nodes = 11;
        testing::write_dataset(testing::make_synthetic(spec).dataset, (root_ / "d11").string());
    }
    ~Workspace() { fs::remove_all(root_); }

    std::string path(const std::string& rel) const { return (root_ / rel).string(); }

    std::string data(const std::string& set) const {
        return " --nodes " + path(set + "/nodes.csv") + " --epidemic " + path(set + "/epidemic.csv") + " --flows " +
               path(set + "/flows.csv");
    }

    /// Runs the CLI inside the workspace with `env` prepended to the command.
    Result run(const std::string& args, const std::string& env = "") const {
        const auto err = root_ / "stderr.txt";
        const std::string cmd =
            "cd " + root_.string() + " && " + env + " " + SAUCIR_CLI + " " + args + " > /dev/null 2> " + err.string();
        const int status = std::system(cmd.c_str());
        return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, ingest::read_file(err.string())};
    }

    json read_json(const std::string& rel) const { return json::parse(ingest::read_file(path(rel))); }
    std::string read(const std::string& rel) const { return ingest::read_file(path(rel)); }

private:
    fs::path root_;
};

const Workspace& workspace() {
    static Workspace w;
    return w;
}

}  // namespace

TEST_CASE("fit writes a fit document and its manifest") {
    const auto& w = workspace();
    const auto r = w.run("fit" + w.data("d11") + " --train 2020-01-24:2020-02-15 --theta 0.25 --out fit11.json",
                         "SOURCE_DATE_EPOCH=86400");
    INFO(r.err);
    REQUIRE(r.exit == 0);
    const auto fit = w.read_json("fit11.json");
    CHECK(fit["nodes"].size() == 11);
    CHECK(fit["train_start"] == "2020-01-24");
    CHECK(fit["train_end"] == "2020-02-15");
    CHECK(fit["theta"] == 0.25);

    const auto m = w.read_json("fit11.manifest.json");
    CHECK(m["command"] == "fit");
    CHECK(m["seed"] == 1);
    CHECK(m["version"] == run::kVersion);
    CHECK(m["started"] == "1970-01-02T00:00:00Z");
    CHECK(m["finished"] == "1970-01-02T00:00:00Z");
    REQUIRE(m["inputs"].size() == 3);
    for (const auto& in : m["inputs"]) {
        CHECK(in["sha256"] == run::sha256_file(in["path"]));
    }
    CHECK(m["config"]["theta"] == 0.25);
    CHECK(m["config"]["train"] == "2020-01-24:2020-02-15");
}

TEST_CASE("validation failures exit 1 with a message") {
    const auto& w = workspace();
    auto r = w.run("fit --nodes missing.csv --epidemic d3/epidemic.csv --flows d3/flows.csv --out x.json");
    CHECK(r.exit == 1);
    CHECK(r.err.find("missing.csv") != std::string::npos);

    r = w.run("fit" + w.data("d3") + " --theta 1.0 --out x.json");
    CHECK(r.exit == 1);
    CHECK(r.err.find("theta") != std::string::npos);

    r = w.run("fit" + w.data("d3") + " --train 2020-02-15 --out x.json");
    CHECK(r.exit == 1);
    r = w.run("fit --nodes d3/nodes.csv --epidemic d3/epidemic.csv --out x.json");
    CHECK(r.exit == 1);
    CHECK(r.err.find("--flows") != std::string::npos);
    CHECK(w.run("no-such-command").exit == 1);
    CHECK(w.run("").exit == 1);
    CHECK(w.run("--help").exit == 0);
}

TEST_CASE("forecast") {
    const auto& w = workspace();
    REQUIRE(w.run("fit" + w.data("d3") + " --out fit3.json").exit == 0);

    auto r = w.run("forecast --fit fit3.json --out fc");
    INFO(r.err);
    REQUIRE(r.exit == 0);
    const auto reports = w.read_json("fc/forecast.json");
    REQUIRE(reports.size() == 3);
    for (const auto& rep : reports) {
        CHECK(rep["predicted"].size() == 3);
        CHECK(rep["mape"].get<double>() <= 0.02);
    }
    for (const char* f : {"forecast.csv", "plot.csv", "manifest.json", "log.txt"}) {
        CHECK(fs::exists(w.path(std::string("fc/") + f)));
    }

    r = w.run("forecast --fit fit3.json --horizon 0 --out fc0.json");
    REQUIRE(r.exit == 0);
    const auto zero = w.read_json("fc0.json");
    CHECK(zero[0]["dates"].size() == 1);
    CHECK(zero[0]["mape"].is_null());
    CHECK(zero[0]["rmse"].is_null());

    r = w.run("forecast --fit fit3.json --horizon 10 --out far.json");
    CHECK(r.exit == 1);
    CHECK(r.err.find("2020-02-18") != std::string::npos);

    CHECK(w.run("forecast --fit nowhere.json --out y.json").exit == 1);
}

TEST_CASE("compare tables") {
    const auto& w = workspace();
    auto r = w.run("compare" + w.data("d3") + " --out cmp");
    INFO(r.err);
    REQUIRE(r.exit == 0);
    auto methods_in = [&](const std::string& rel) {
        std::set<std::string> seen;
        std::istringstream in(w.read(rel));
        std::string line;
        std::getline(in, line);
        while (std::getline(in, line)) {
            seen.insert(line.substr(0, line.find(',')));
        }
        return seen;
    };
    CHECK(methods_in("cmp/mape.csv") == std::set<std::string>{"SIR", "SIR+M", "SaucIR-M", "SaucIR"});
    CHECK(methods_in("cmp/rmse.csv").size() == 4);

    REQUIRE(w.run("compare" + w.data("d3") + " --methods SIR,SaucIR --out cmp2").exit == 0);
    CHECK(methods_in("cmp2/mape.csv") == std::set<std::string>{"SIR", "SaucIR"});

    REQUIRE(w.run("compare" + w.data("d3") + " --out cmp3").exit == 0);
    CHECK(w.read("cmp/mape.csv") == w.read("cmp3/mape.csv"));
    CHECK(w.read("cmp/rmse.csv") == w.read("cmp3/rmse.csv"));
    CHECK(w.read("cmp/comparison.json") == w.read("cmp3/comparison.json"));

    CHECK(w.run("compare" + w.data("d3") + " --methods SIR,SEIR --out bad").exit == 1);
}

TEST_CASE("optimize") {
    const auto& w = workspace();
    REQUIRE(w.run("fit" + w.data("d3") + " --out fitopt.json").exit == 0);

    auto r = w.run("optimize --fit fitopt.json --generations 1 --population 2 --out tiny.json");
    INFO(r.err);
    REQUIRE(r.exit == 0);
    CHECK(w.read_json("tiny.json")["fitness_history"].size() == 1);
    CHECK(fs::exists(w.path("tiny.schedule.csv")));
    CHECK(fs::exists(w.path("tiny.manifest.json")));

    const std::string args = "optimize --fit fitopt.json --generations 15 --population 10 --seed 5 --scale medium";
    REQUIRE(w.run(args + " --out a").exit == 0);
    REQUIRE(w.run(args + " --out b", "SAUCIR_THREADS=3").exit == 0);
    CHECK(w.read("a/optimization.json") == w.read("b/optimization.json"));
    CHECK(w.read("a/schedule.csv") == w.read("b/schedule.csv"));
    CHECK(w.read_json("b/manifest.json")["config"]["threads"] == 3);
    CHECK(w.read_json("a/manifest.json")["config"]["scale"] == 2.0);

    CHECK(w.run("optimize --fit fitopt.json --scale enormous --out z.json").exit == 1);
    CHECK(w.run("optimize --fit fitopt.json --population 4 --elitism 4 --out z.json").exit == 1);
    CHECK(w.run("optimize --fit fitopt.json --targets N0,N9 --out z.json").exit == 1);
}

TEST_CASE("simulate and ingest") {
    const auto& w = workspace();
    REQUIRE(w.run("fit" + w.data("d3") + " --out fitsim.json").exit == 0);
    REQUIRE(w.run("simulate --fit fitsim.json --horizon 40 --out open.json").exit == 0);
    REQUIRE(w.run("simulate --fit fitsim.json --horizon 40 --mobility-multiplier 0 --out shut.json").exit == 0);
    CHECK(w.read_json("shut.json")["total_D"].get<double>() <= w.read_json("open.json")["total_D"].get<double>());
    CHECK(w.run("simulate --fit fitsim.json --horizon 400 --out long.json").exit == 1);

    REQUIRE(w.run("ingest" + w.data("d3") + " --out canon").exit == 0);
    CHECK(w.read("canon/nodes.csv") == w.read("d3/nodes.csv"));
    CHECK(w.read("canon/epidemic.csv") == w.read("d3/epidemic.csv"));
    CHECK(w.read("canon/flows.csv") == w.read("d3/flows.csv"));
}

TEST_CASE("serve answers health and rejects a bad fit path") {
    const auto& w = workspace();
    REQUIRE(w.run("fit" + w.data("d3") + " --out fitserve.json").exit == 0);
    CHECK(w.run("serve --fit nowhere.json --port 0").exit == 1);

    int port = 0;
    {
        httplib::Server probe;
        port = probe.bind_to_any_port("127.0.0.1");
    }
    const pid_t pid = ::fork();
    REQUIRE(pid >= 0);
    if (pid == 0) {
        const std::string fit = w.path("fitserve.json");
        const std::string p = std::to_string(port);
        ::execl(SAUCIR_CLI, SAUCIR_CLI, "serve", "--fit", fit.c_str(), "--port", p.c_str(), nullptr);
        ::_exit(127);
    }
    httplib::Client client("127.0.0.1", port);
    httplib::Result res;
    for (int i = 0; i < 200 && !res; ++i) {
        std::this_thread::sleep_for(std::chrono::milliseconds(25));
        res = client.Get("/health");
    }
    REQUIRE(res);
    CHECK(res->status == 200);
    const auto body = json::parse(res->body);
    CHECK(body["nodes"] == 3);
    CHECK(body["fits"] == json::array({"fitserve"}));

    ::kill(pid, SIGTERM);
    int status = 0;
    ::waitpid(pid, &status, 0);
    CHECK(WIFEXITED(status));
    CHECK(WEXITSTATUS(status) == 0);
}
