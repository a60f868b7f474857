#include <catch2/catch_amalgamated.hpp>

#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include <ehrelay/trace.hpp>

using namespace ehrelay;

namespace
{
    std::string trace_of(const SimConfig& c)
    {
        std::ostringstream out;
        write_trace(c, out);
        return out.str();
    }

    std::vector<std::string> lines_of(const std::string& text)
    {
        std::vector<std::string> lines;
        std::istringstream       in(text);
        for (std::string line; std::getline(in, line);)
            lines.push_back(line);
        return lines;
    }

    std::string join(const std::vector<std::string>& lines)
    {
        std::string out;
        for (const auto& l : lines)
            out += l + "\n";
        return out;
    }

    ReplayResult replay(const std::string& text)
    {
        std::istringstream in(text);
        return replay_check(in);
    }

    SimConfig small_config(PolicyKind policy, Schedule schedule = Schedule::Pipelined)
    {
        SimConfig c;
        c.n_relays   = 5;
        c.policy     = policy;
        c.eta        = 0.1;
        c.n_messages = 400;
        c.schedule   = schedule;
        c.seed       = 31;
        return c;
    }
} // namespace

TEST_CASE("a fresh trace replays cleanly", "[trace]")
{
    for (auto schedule : {Schedule::Pipelined, Schedule::Framed})
    {
        CHECK(replay(trace_of(small_config(PolicyKind::srs(), schedule))).ok);
        CHECK(replay(trace_of(small_config(PolicyKind::mrs(3), schedule))).ok);
    }
}

TEST_CASE("traces are byte-identical for identical configurations", "[trace][determinism]")
{
    const auto c = small_config(PolicyKind::mrs(2));
    CHECK(trace_of(c) == trace_of(c));
}

TEST_CASE("tracing does not change the outcomes", "[trace]")
{
    const auto         c = small_config(PolicyKind::srs());
    std::ostringstream sink;
    CHECK(write_trace(c, sink) == run_trial(c));
}

TEST_CASE("a perturbed battery is detected at its slot", "[trace]")
{
    auto       lines = lines_of(trace_of(small_config(PolicyKind::srs())));
    const auto slot  = 57u;
    auto       rec   = nlohmann::json::parse(lines[slot + 1]);
    rec["after"][2]  = rec["after"][2].get<double>() + 1e-6;
    lines[slot + 1]  = rec.dump();

    const auto result = replay(join(lines));
    CHECK_FALSE(result.ok);
    REQUIRE(result.first_divergent_slot.has_value());
    CHECK(*result.first_divergent_slot == slot);
}

TEST_CASE("other forms of damage are detected", "[trace]")
{
    const auto lines = lines_of(trace_of(small_config(PolicyKind::mrs(2))));

    SECTION("missing gain")
    {
        auto copy = lines;
        auto rec  = nlohmann::json::parse(copy[11]);
        rec["gains"].erase(0);
        copy[11]          = rec.dump();
        const auto result = replay(join(copy));
        CHECK_FALSE(result.ok);
        CHECK(result.first_divergent_slot == 10u);
    }
    SECTION("altered outcome")
    {
        auto copy = lines;
        auto rec  = nlohmann::json::parse(copy[21]);
        rec["resolved"] = nlohmann::json::array({nlohmann::json::array({19, "empty_lambda"})});
        copy[21]          = rec.dump();
        CHECK_FALSE(replay(join(copy)).ok);
    }
    SECTION("truncated")
    {
        auto copy = lines;
        copy.pop_back();
        const auto result = replay(join(copy));
        CHECK_FALSE(result.ok);
        CHECK(result.first_divergent_slot == copy.size() - 1);
    }
    SECTION("no header")
    {
        CHECK_FALSE(replay("").ok);
        CHECK_FALSE(replay(lines[1] + "\n").ok);
    }
}
