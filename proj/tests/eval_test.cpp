#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>
#include <sstream>

#include "helpers.hpp"
#include "qsug/error.hpp"
#include "qsug/eval.hpp"

using namespace qsug;
using namespace qsug::testing;

namespace {

std::vector<AnnotationRecord> constant_records(std::size_t n, int score) {
    std::vector<AnnotationRecord> records;
    for (std::size_t i = 0; i < n; ++i) {
        records.push_back({"q" + std::to_string(i % 7), "s", "a1", score});
    }
    return records;
}

} // namespace

TEST_SUITE("eval") {

TEST_CASE("annotation parsing maps columns and skips comments") {
    std::string content =
        "# sheet header\n"
        "java api\tjava download\tann1\t4\n"
        "\n"
        "svn\tsvn checkout\tann2\t5\r\n"
        "# trailing note\n";
    auto records = parse_annotations(content);
    REQUIRE(records.size() == 2);
    CHECK(records[0].query == "java api");
    CHECK(records[0].suggestion == "java download");
    CHECK(records[0].annotator_id == "ann1");
    CHECK(records[0].score == 4);
    CHECK(records[1].annotator_id == "ann2");
    CHECK(records[1].score == 5);
}

TEST_CASE("annotation parse errors carry line numbers") {
    CHECK_THROWS_WITH_AS((void)parse_annotations("q\ts\ta\t4\nq\ts\ta\n"),
                         doctest::Contains("line 2"), Error);
    CHECK_THROWS_WITH_AS((void)parse_annotations("q\ts\ta\tsix\n"), doctest::Contains("line 1"),
                         Error);
    CHECK_THROWS_WITH_AS((void)parse_annotations("q\ts\ta\t0\n"), doctest::Contains("line 1"),
                         Error);
    CHECK_THROWS_WITH_AS((void)parse_annotations("q\ts\ta\t6\n"), doctest::Contains("line 1"),
                         Error);
}

TEST_CASE("uniform fours average to 4.0 and 80 percent") {
    EvalSummary summary = aggregate_annotations(constant_records(25, 4), QueryKind::click_existing);
    CHECK(summary.kind == QueryKind::click_existing);
    CHECK(summary.n_records == 25);
    CHECK(summary.n_queries == 7);
    CHECK(summary.mean_score == 4.0);
    CHECK(summary.correlation_pct == 80);
}

TEST_CASE("reference score mixtures hit the expected percentages") {
    // 98 fours + 2 threes: mean 3.98 -> 79%
    auto records = constant_records(98, 4);
    records.push_back({"qx", "s", "a", 3});
    records.push_back({"qy", "s", "a", 3});
    EvalSummary a = aggregate_annotations(records, QueryKind::click_existing);
    CHECK(a.n_records == 100);
    CHECK(a.mean_score == doctest::Approx(3.98));
    CHECK(a.correlation_pct == 79);

    // 79 threes + 21 fours: mean 3.21 -> 64%
    auto mixed = constant_records(79, 3);
    for (std::size_t i = 0; i < 21; ++i) mixed.push_back({"q", "s", "a", 4});
    EvalSummary b = aggregate_annotations(mixed, QueryKind::click_absent);
    CHECK(b.kind == QueryKind::click_absent);
    CHECK(b.mean_score == doctest::Approx(3.21));
    CHECK(b.correlation_pct == 64);
}

TEST_CASE("aggregation rejects empty input and out-of-range scores") {
    CHECK_THROWS_AS((void)aggregate_annotations({}, QueryKind::click_existing), Error);
    std::vector<AnnotationRecord> bad = {{"q", "s", "a", 9}};
    CHECK_THROWS_WITH_AS((void)aggregate_annotations(bad, QueryKind::click_existing),
                         doctest::Contains("q"), Error);
}

TEST_CASE("percentage is an exact integer floor of the mean") {
    std::mt19937_64 rng(23);
    for (int round = 0; round < 300; ++round) {
        std::size_t n = 1 + rng() % 40;
        std::vector<AnnotationRecord> records;
        std::uint64_t sum = 0;
        for (std::size_t i = 0; i < n; ++i) {
            int score = 1 + int(rng() % 5);
            sum += std::uint64_t(score);
            records.push_back({"q" + std::to_string(rng() % 5), "s", "a", score});
        }
        EvalSummary summary = aggregate_annotations(records, QueryKind::click_existing);
        CHECK(summary.correlation_pct == int((20 * sum) / n));
        CHECK(summary.correlation_pct >= 20);
        CHECK(summary.correlation_pct <= 100);
        // floor(mean/5*100) by construction
        CHECK(std::uint64_t(summary.correlation_pct) * n <= 20 * sum);
        CHECK((std::uint64_t(summary.correlation_pct) + 1) * n > 20 * sum);
    }
}

TEST_CASE("aggregation ignores record order and annotator labels") {
    std::mt19937_64 rng(29);
    std::vector<AnnotationRecord> records;
    for (int i = 0; i < 60; ++i) {
        records.push_back({"q" + std::to_string(i % 11), "s" + std::to_string(i % 3),
                           "a" + std::to_string(i % 4), 1 + int(rng() % 5)});
    }
    EvalSummary base = aggregate_annotations(records, QueryKind::click_existing);

    auto shuffled = records;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    for (auto& r : shuffled) r.annotator_id = "someone-else";
    EvalSummary relabeled = aggregate_annotations(shuffled, QueryKind::click_existing);
    CHECK(relabeled.mean_score == base.mean_score);
    CHECK(relabeled.correlation_pct == base.correlation_pct);
    CHECK(relabeled.n_queries == base.n_queries);
}

TEST_CASE("query sampling is seeded, disjoint by class, and within bounds") {
    std::mt19937_64 rng(31);
    Engine engine = random_engine(rng, 12, 8);
    // a few click-absent observations on top of the graph queries
    engine.totals["novel0"] = 0;
    engine.totals["novel1"] = 0;

    EvalSample sample = sample_eval_queries(engine, 3, 42);
    EvalSample again = sample_eval_queries(engine, 3, 42);
    CHECK(sample.existing == again.existing);
    CHECK(sample.absent == again.absent);

    CHECK(sample.existing.size() <= 3);
    CHECK(sample.absent.size() <= 3);
    std::set<std::string> seen;
    for (const auto& q : sample.existing) {
        CHECK(engine.graph.has_query(q));
        CHECK(seen.insert(q).second);
    }
    for (const auto& q : sample.absent) {
        CHECK_FALSE(engine.graph.has_query(q));
        CHECK(seen.insert(q).second);
        CHECK(engine.totals.count(q) == 1);
    }
    CHECK(sample.existing_available == engine.graph.query_count());
    CHECK(sample.absent_available == 2);
}

TEST_CASE("sampling reports shortfall and returns small classes whole") {
    std::vector<QueryDocPair> pairs = {{"a", "d", 1}, {"b", "d", 2}};
    Engine engine;
    engine.graph = ClickGraph::build(pairs);
    engine.totals = click_totals(pairs);
    EvalSample sample = sample_eval_queries(engine, 100, 7);
    CHECK(sample.shortfall);
    CHECK(sample.existing.size() == 2);
    CHECK(sample.absent.empty());
    std::vector<std::string> sorted = sample.existing;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == std::vector<std::string>{"a", "b"});
}

TEST_CASE("different seeds usually pick different samples") {
    std::mt19937_64 rng(37);
    Engine engine = random_engine(rng, 40, 10);
    while (engine.graph.query_count() < 10) engine = random_engine(rng, 40, 10);
    EvalSample a = sample_eval_queries(engine, 5, 1);
    EvalSample b = sample_eval_queries(engine, 5, 2);
    CHECK(a.existing != b.existing);
}

TEST_CASE("worksheet rows come from the table, capped per query") {
    SuggestionTable table;
    table["q1"].items = {{"s1", 3.0}, {"s2", 2.0}, {"s3", 1.5}, {"s4", 1.0},
                         {"s5", 0.9}, {"s6", 0.8}};
    table["q2"].items = {{"t1", 1.0}};
    table["q3"].reason = "no_candidates"; // empty entry: skipped entirely
    auto sheet = worksheet_from_table({"q1", "q2", "q3", "unknown"}, table, 5);
    REQUIRE(sheet.size() == 2);
    CHECK(sheet[0].query == "q1");
    CHECK(sheet[0].suggestions == std::vector<std::string>{"s1", "s2", "s3", "s4", "s5"});
    CHECK(sheet[1].query == "q2");
    CHECK(sheet[1].suggestions == std::vector<std::string>{"t1"});
}

TEST_CASE("rendered worksheets are deterministic, shuffled permutations") {
    std::vector<WorksheetQuery> queries = {
        {"java api", {"java download", "java tutorial", "java faq", "jdk docs", "java se"}},
        {"svn", {"svn checkout", "svn commit"}},
    };
    std::string sheet = render_worksheet(queries, 99);
    CHECK(sheet == render_worksheet(queries, 99));
    CHECK(sheet.rfind("# Suggestion annotation sheet", 0) == 0);

    std::size_t rows = 0;
    std::set<std::string> pairs_seen;
    std::istringstream in(sheet);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        ++rows;
        auto first_tab = line.find('\t');
        REQUIRE(first_tab != std::string::npos);
        std::string query = line.substr(0, first_tab);
        auto second_tab = line.find('\t', first_tab + 1);
        REQUIRE(second_tab != std::string::npos);
        std::string suggestion = line.substr(first_tab + 1, second_tab - first_tab - 1);
        // trailing annotator + score columns are blank
        CHECK(line.substr(second_tab) == "\t\t");
        pairs_seen.insert(query + "\t" + suggestion);
    }
    CHECK(rows == 7);
    REQUIRE(pairs_seen.size() == 7); // every pair appears exactly once
    for (const auto& q : queries) {
        for (const auto& s : q.suggestions) {
            CHECK(pairs_seen.count(q.query + "\t" + s) == 1);
        }
    }

    // a worksheet parses as annotations once the blank columns are filled in
    std::string filled;
    std::istringstream in2(sheet);
    while (std::getline(in2, line)) {
        if (line.empty() || line[0] == '#') continue;
        filled += line.substr(0, line.size() - 1) + "ann1\t4\n";
    }
    auto records = parse_annotations(filled);
    CHECK(records.size() == 7);
    EvalSummary summary = aggregate_annotations(records, QueryKind::click_existing);
    CHECK(summary.correlation_pct == 80);

    // some seed reorders at least one query's block
    bool reordered = false;
    for (std::uint64_t seed = 100; seed < 110 && !reordered; ++seed) {
        reordered = render_worksheet(queries, seed) != sheet;
    }
    CHECK(reordered);
}

} // TEST_SUITE
