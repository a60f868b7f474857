#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include <ehrelay/report.hpp>

using namespace ehrelay;

namespace
{
    SweepPoint point(double rate, std::uint64_t outages, std::uint64_t messages)
    {
        SweepPoint p;
        p.config.target_rate = rate;
        p.estimate           = make_estimate(outages, messages);
        return p;
    }
} // namespace

TEST_CASE("CSV layout", "[report]")
{
    const std::vector<SweepPoint> one{point(1.0, 622, 20000)};
    const auto                    text = to_csv(one);
    CHECK(text
          == "policy,n,m,eta,rate,sigma2,ps_dbw,pr_dbw,schedule,seed,messages,outages,p_out,ci_halfwidth\n"
             "srs,5,0,0.5,1,1,10,10,pipelined,1,20000,622,0.0311,"
                 + format_double(one[0].estimate.ci_halfwidth) + "\n");

    std::vector<SweepPoint> four;
    for (double r : {0.5, 1.0, 1.5, 2.0})
        four.push_back(point(r, 10, 100));
    std::istringstream in(to_csv(four));
    std::string        line;
    int                rows = -1;
    while (std::getline(in, line))
        ++rows;
    CHECK(rows == 4);
    CHECK(to_csv(four).find('\r') == std::string::npos);
}

TEST_CASE("p_out survives a CSV round trip exactly", "[report][property]")
{
    std::mt19937_64         rng(3);
    std::vector<SweepPoint> table;
    for (int i = 0; i < 500; ++i)
    {
        const auto messages = std::uniform_int_distribution<std::uint64_t>(1, 1000000)(rng);
        const auto outages  = std::uniform_int_distribution<std::uint64_t>(0, messages)(rng);
        table.push_back(point(0.1 * i, outages, messages));
    }
    std::istringstream in(to_csv(table));
    const auto         values = read_p_out(in);
    REQUIRE(values.size() == table.size());
    for (std::size_t i = 0; i < values.size(); ++i)
        REQUIRE(values[i] == table[i].estimate.p_hat);
}

TEST_CASE("format_double is shortest round-trip with a dot", "[report]")
{
    CHECK(format_double(0.5) == "0.5");
    CHECK(format_double(10.0) == "10");
    CHECK(format_double(0.1 + 0.2) == "0.30000000000000004");
    CHECK(parse_double(format_double(1.0 / 3.0)) == 1.0 / 3.0);
    CHECK_THROWS(parse_double("1,5"));
}

TEST_CASE("JSON rows mirror the CSV columns and carry the manifest", "[report]")
{
    RunManifest m;
    m.subcommand = "run";
    m.timestamp  = "2026-01-01T00:00:00Z";
    m.outputs    = {"out.json"};
    const std::vector<SweepPoint> table{point(1.0, 3, 10)};
    const auto                    j = table_to_json(m, table);
    REQUIRE(j["rows"].size() == 1);
    const auto& row = j["rows"][0];
    for (const char* key : {"policy", "n", "m", "eta", "rate", "sigma2", "ps_dbw", "pr_dbw", "schedule", "seed",
                            "messages", "outages", "p_out", "ci_halfwidth"})
        CHECK(row.contains(key));
    CHECK(row["p_out"].get<double>() == 0.3);
    CHECK(j["manifest"]["subcommand"] == "run");
}

TEST_CASE("manifest round trip", "[report]")
{
    RunManifest m;
    m.subcommand                 = "sweep";
    m.spec.base.policy           = PolicyKind::mrs(3);
    m.spec.base.n_relays         = 10;
    m.spec.base.initial_energy   = 42.0;
    m.spec.rates                 = {0.5, 1.0};
    m.spec.ms                    = {2, 3};
    m.spec.common_random_numbers = false;
    m.threads                    = 4;
    m.format                     = "json";
    m.outputs                    = {"a.json"};
    const auto text              = manifest_to_json(m).dump();
    const auto back              = manifest_from_json(nlohmann::json::parse(text));
    CHECK(back.spec == m.spec);
    CHECK(back.subcommand == m.subcommand);
    CHECK(back.threads == 4);
    CHECK(back.outputs == m.outputs);

    auto broken = nlohmann::json::parse(text);
    broken["config"]["bogus"] = 1;
    CHECK_THROWS_AS(manifest_from_json(broken), ConfigError);
}
