#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <nlohmann/json.hpp>

#include <ehrelay/cli.hpp>

using namespace ehrelay;
namespace fs = std::filesystem;

namespace
{
    struct TempDir
    {
        fs::path path;

        TempDir()
        {
            static std::atomic<int> counter{0};
            path = fs::temp_directory_path()
                   / ("ehrelay-cli-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
            fs::create_directories(path);
        }
        ~TempDir() { fs::remove_all(path); }

        std::string operator/(const std::string& name) const { return (path / name).string(); }
    };

    struct Result
    {
        int         code = 0;
        std::string out;
        std::string err;
    };

    Result invoke(std::vector<std::string> args)
    {
        std::ostringstream out, err;
        const int          code = cli::run_cli(args, out, err);
        return {code, out.str(), err.str()};
    }

    std::string slurp(const std::string& path)
    {
        std::ifstream      in(path, std::ios::binary);
        std::ostringstream s;
        s << in.rdbuf();
        return s.str();
    }

    int line_count(const std::string& text)
    {
        return static_cast<int>(std::count(text.begin(), text.end(), '\n'));
    }
} // namespace

TEST_CASE("parse_invocation fills defaults and flags", "[cli]")
{
    const auto inv = cli::parse_invocation({"run", "--policy", "srs", "--n", "5", "--eta", "0.5", "--rate", "1.0"});
    const auto& c  = inv.spec.base;
    CHECK(inv.subcommand == "run");
    CHECK(c.n_relays == 5);
    CHECK(c.eta == 0.5);
    CHECK(c.target_rate == 1.0);
    CHECK(c.source_power_dbw == 10.0);
    CHECK(c.relay_power_dbw == 10.0);
    CHECK(c.distance == 1.0);
    CHECK(c.n_messages == 20000);
    CHECK(c.policy == PolicyKind::srs());

    const auto mrs = cli::parse_invocation({"--policy", "mrs", "--m", "3", "run"});
    CHECK(mrs.spec.base.policy == PolicyKind::mrs(3));
}

TEST_CASE("parse_invocation rejects bad input naming the key", "[cli]")
{
    try
    {
        cli::parse_invocation({"run", "--policy", "mrs"});
        FAIL("expected an error");
    }
    catch (const ConfigError& e)
    {
        CHECK(e.key() == "m");
        CHECK(std::string(e.what()) == "m required for mrs");
    }
    try
    {
        cli::parse_invocation({"run", "--eta", "1.5"});
        FAIL("expected an error");
    }
    catch (const ConfigError& e)
    {
        CHECK(e.key() == "eta");
    }
    CHECK_THROWS_AS(cli::parse_invocation({"run", "--m", "2"}), ConfigError);
    CHECK_THROWS_AS(cli::parse_invocation({"run", "--bogus", "2"}), CLI::ParseError);
    CHECK_THROWS_AS(cli::parse_invocation({"run", "--policy", "xrs"}), CLI::ParseError);
    CHECK_THROWS_AS(cli::parse_invocation({}), CLI::ParseError);
}

TEST_CASE("config file sits between defaults and flags", "[cli]")
{
    TempDir dir;
    {
        std::ofstream f(dir / "scenario.ini");
        f << "n = 7\neta = 0.25\nrate = 2\n";
    }
    const auto inv = cli::parse_invocation({"run", "--config", dir / "scenario.ini", "--rate", "0.5"});
    CHECK(inv.spec.base.n_relays == 7);
    CHECK(inv.spec.base.eta == 0.25);
    CHECK(inv.spec.base.target_rate == 0.5);

    {
        std::ofstream f(dir / "bad.ini");
        f << "n = 7\nfrobnicate = 1\n";
    }
    const auto r = invoke({"run", "--config", dir / "bad.ini", "--out", dir / "x.csv"});
    CHECK(r.code == 1);
    CHECK(r.err.find("frobnicate") != std::string::npos);
}

TEST_CASE("run writes a one-row CSV plus manifest, reproducibly", "[cli][determinism]")
{
    TempDir                        dir;
    const std::vector<std::string> base{"run", "--n", "5", "--eta", "0.3", "--messages", "3000", "--seed", "9"};
    auto                           args = base;
    args.insert(args.end(), {"--out", dir / "a.csv"});
    const auto first = invoke(args);
    REQUIRE(first.code == 0);
    const auto csv = slurp(dir / "a.csv");
    CHECK(line_count(csv) == 2);
    CHECK(csv.rfind(std::string(csv_header) + "\n", 0) == 0);
    CHECK(fs::exists(dir / "a.csv.manifest.json"));

    args.back() = dir / "b.csv";
    REQUIRE(invoke(args).code == 0);
    CHECK(slurp(dir / "b.csv") == csv);

    SECTION("rerun from the manifest reproduces the bytes")
    {
        const auto again = invoke({"rerun", dir / "a.csv.manifest.json", "--out", dir / "c.csv"});
        REQUIRE(again.code == 0);
        CHECK(slurp(dir / "c.csv") == csv);
    }
}

TEST_CASE("sweep emits rows in axis order", "[cli]")
{
    TempDir    dir;
    const auto r = invoke({"sweep", "--rates", "0.5,1,1.5,2", "--messages", "1000", "--out", dir / "s.csv"});
    REQUIRE(r.code == 0);
    std::istringstream in(slurp(dir / "s.csv"));
    const auto         p = read_p_out(in);
    REQUIRE(p.size() == 4);
    CHECK(std::is_sorted(p.begin(), p.end()));
}

TEST_CASE("sweep output does not depend on the worker count", "[cli][determinism]")
{
    TempDir                  dir;
    std::vector<std::string> outputs;
    for (const char* threads : {"1", "4", "8"})
    {
        const auto path = dir / (std::string("t") + threads + ".csv");
        REQUIRE(invoke({"sweep", "--policy", "mrs", "--ms", "1,2,3", "--rates", "0.5,1.5", "--messages", "1000",
                     "--threads", threads, "--out", path})
                    .code
                == 0);
        outputs.push_back(slurp(path));
    }
    CHECK(outputs[0] == outputs[1]);
    CHECK(outputs[0] == outputs[2]);
}

TEST_CASE("json output embeds the manifest", "[cli]")
{
    TempDir    dir;
    const auto r = invoke({"run", "--messages", "500", "--format", "json", "--out", dir / "r.json"});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(slurp(dir / "r.json"));
    CHECK(j["rows"].size() == 1);
    CHECK(j["manifest"]["config"]["messages"] == 500);
    CHECK(j["manifest"]["tool"] == "ehrelay");
}

TEST_CASE("default output directory comes from the environment", "[cli]")
{
    TempDir dir;
    ::setenv(cli::output_dir_env, dir.path.c_str(), 1);
    const auto r = invoke({"run", "--messages", "200"});
    ::unsetenv(cli::output_dir_env);
    REQUIRE(r.code == 0);
    CHECK(fs::exists(dir / "run.csv"));
    CHECK(fs::exists(dir / "run.csv.manifest.json"));
}

TEST_CASE("opt-m and compare report their verdicts", "[cli]")
{
    TempDir    dir;
    const auto opt = invoke({"opt-m", "--n", "10", "--eta", "0.05", "--rate", "1.0", "--messages", "2000", "--out",
                          dir / "opt.csv"});
    REQUIRE(opt.code == 0);
    CHECK(opt.out.find("m_star = ") != std::string::npos);
    CHECK(line_count(slurp(dir / "opt.csv")) == 11);

    const auto cmp = invoke({"compare", "--n", "10", "--eta", "0.05", "--messages", "2000", "--out", dir / "cmp.json",
                          "--format", "json"});
    REQUIRE(cmp.code == 0);
    CHECK(cmp.out.find("ordering") != std::string::npos);
    const auto j = nlohmann::json::parse(slurp(dir / "cmp.json"));
    CHECK(j["rows"].size() == 15);
    CHECK(j["comparison"].size() == 5);
}

TEST_CASE("replay accepts good traces and rejects tampered ones", "[cli]")
{
    TempDir    dir;
    const auto trace = dir / "trace.log";
    REQUIRE(invoke({"run", "--messages", "300", "--policy", "mrs", "--m", "2", "--trace", trace, "--out", dir / "r.csv"})
                .code
            == 0);
    CHECK(invoke({"replay", trace}).code == 0);

    auto text = slurp(trace);
    auto pos  = text.find("\"harvested\":", text.find('\n', text.find('\n') + 1));
    REQUIRE(pos != std::string::npos);
    text.insert(pos + 12, "1");
    {
        std::ofstream f(dir / "bad.log", std::ios::binary);
        f << text;
    }
    const auto bad = invoke({"replay", dir / "bad.log"});
    CHECK(bad.code == 1);
    CHECK(bad.err.find("slot") != std::string::npos);
    CHECK(invoke({"replay", dir / "missing.log"}).code == 1);
}

TEST_CASE("exit codes", "[cli]")
{
    TempDir dir;
    CHECK(invoke({"run", "--policy", "mrs", "--out", dir / "x.csv"}).code == 1);
    CHECK(invoke({"run", "--eta", "1.5", "--out", dir / "x.csv"}).code == 1);
    CHECK(invoke({"sweep", "--ms", "1,2", "--out", dir / "x.csv"}).code == 1);
    CHECK(invoke({"run", "--messages", "10", "--out", "/proc/definitely/not/writable.csv"}).code == 1);
    CHECK(invoke({"--help"}).code == 0);
    CHECK(invoke({"run", "--messages", "0", "--out", dir / "x.csv"}).code == 1);
}
