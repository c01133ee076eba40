#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <string>

using std::string;

namespace {

struct RunResult {
    int exit_code = -1;
    string output;  // stdout + stderr
};

RunResult run(const string& args) {
    string command = string(PEL_CLI_PATH) + " " + args + " 2>&1";
    std::array<char, 4096> buffer{};
    RunResult result;
    FILE* pipe = popen(command.c_str(), "r");
    REQUIRE(pipe != nullptr);
    while (std::fgets(buffer.data(), buffer.size(), pipe)) result.output += buffer.data();
    int status = pclose(pipe);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

string fixture(const string& name) { return string(PEL_DATA_DIR) + "/" + name; }

double printed_probability(const string& output) {
    // Last whitespace-separated token of the first line.
    auto end = output.find('\n');
    string line = output.substr(0, end);
    auto space = line.find_last_of(' ');
    return std::atof(line.substr(space == string::npos ? 0 : space + 1).c_str());
}

}  // namespace

TEST_CASE("validate accepts the fixtures and rejects broken files") {
    RunResult ok = run("validate " + fixture("crisis.pel.json"));
    CHECK(ok.exit_code == 0);
    CHECK(ok.output.find("OK") != string::npos);

    CHECK(run("validate " + fixture("crisis_id.pel.json")).exit_code == 0);
    CHECK(run("validate " + fixture("matching_game.pel.json")).exit_code == 0);

    const string broken = "/tmp/pel_cli_broken.pel.json";
    {
        FILE* f = std::fopen(broken.c_str(), "w");
        std::fputs(
            "{\"version\": \"pel-1\","
            "\"variables\": [{\"name\": \"X\", \"domain\": [\"0\", \"1\"]}],"
            "\"cpds\": [{\"child\": \"X\", \"parents\": [], \"rows\": [[0.7, 0.7]]}]}",
            f);
        std::fclose(f);
    }
    RunResult bad = run("validate " + broken);
    CHECK(bad.exit_code == 1);
    CHECK(bad.output.find("row-not-normalized") != string::npos);
    std::remove(broken.c_str());

    RunResult missing = run("validate /nonexistent.pel.json");
    CHECK(missing.exit_code != 0);
}

TEST_CASE("query prints six decimals and checks against the oracle") {
    RunResult r = run("query " + fixture("crisis.pel.json") +
                      " \"Bel[i,4] >= 0.8 (C=high or C=medium)\" --check");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("fast   0.108800") != string::npos);
    CHECK(r.output.find("oracle 0.108800") != string::npos);

    RunResult direct =
        run("query " + fixture("crisis.pel.json") + " \"Bel[i,4] >= 0.8 (C=high or C=medium)\"");
    CHECK(direct.exit_code == 0);
    CHECK(direct.output.find("0.108800") != string::npos);
}

TEST_CASE("query --explain reports the relevant observations") {
    RunResult r = run("query " + fixture("crisis.pel.json") +
                      " \"Bel[i,4] >= 0.8 (C=high or C=medium)\" --explain");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("Rel(Bel[i,4] >= 0.8 (C=high or C=medium)) = {V, M}") != string::npos);
}

TEST_CASE("query rejects unbindable formulas with a nonzero exit") {
    RunResult r = run("query " + fixture("crisis.pel.json") + " \"X=missing\"");
    CHECK(r.exit_code != 0);
    CHECK(r.output.find("error") != string::npos);
}

TEST_CASE("evidence flags condition the query") {
    RunResult r = run("query " + fixture("crisis.pel.json") +
                      " \"Bel[i,4] >= 0.8 (C=high or C=medium)\" --evidence V=false");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("0.544000") != string::npos);
}

TEST_CASE("assert-query conditions on the asserted formula") {
    RunResult up = run("assert-query " + fixture("crisis.pel.json") + " \"V=false\" " +
                       "\"Bel[i,4] >= 0.8 (C=high or C=medium)\"");
    CHECK(up.exit_code == 0);
    double conditional = printed_probability(up.output);
    CHECK(conditional == doctest::Approx(0.544).epsilon(1e-6));
    CHECK(conditional > 0.1088);  // asserting V=false raises the belief's probability

    RunResult self = run("assert-query " + fixture("crisis.pel.json") +
                         " \"V=false\" \"V=false\"");
    CHECK(self.output.find("1.000000") != string::npos);

    RunResult taut = run("assert-query " + fixture("crisis.pel.json") +
                         " \"V=true or !V=true\" \"Bel[i,4] >= 0.8 (C=high or C=medium)\"");
    CHECK(taut.output.find("0.108800") != string::npos);

    RunResult contra = run("assert-query " + fixture("crisis.pel.json") +
                           " \"V=true and !V=true\" \"V=false\"");
    CHECK(contra.exit_code != 0);
    CHECK(contra.output.find("inconsistent-assertion") != string::npos);
}

TEST_CASE("solve prints the policy and meu") {
    RunResult r = run("solve " + fixture("matching_game.pel.json"));
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("X=0 -> 0") != string::npos);
    CHECK(r.output.find("X=1 -> 1") != string::npos);
    CHECK(r.output.find("meu = 1.000000") != string::npos);
}

TEST_CASE("solve --export-bn writes a queryable document") {
    const string exported = "/tmp/pel_cli_export.pel.json";
    RunResult solved = run("solve " + fixture("crisis_id.pel.json") + " --export-bn " + exported);
    CHECK(solved.exit_code == 0);
    CHECK(solved.output.find("meu = 0.431200") != string::npos);

    // The converted model satisfies the structural identity
    // Pr(Bel[u,2] >= 0.8 (V=true)) = Pr(F=false).
    RunResult belief = run("query " + exported + " \"Bel[u,2] >= 0.8 (V=true)\" --check");
    CHECK(belief.exit_code == 0);
    CHECK(belief.output.find("fast   0.958000") != string::npos);
    RunResult fire = run("query " + exported + " \"F=false\"");
    CHECK(fire.output.find("0.958000") != string::npos);

    RunResult stage1 = run("query " + exported + " \"Bel[u,1] >= 0.8 (V=true)\"");
    CHECK(stage1.output.find("1.000000") != string::npos);
    std::remove(exported.c_str());
}

TEST_CASE("solve completes missing no-forgetting arcs with a warning") {
    const string forgetful = "/tmp/pel_cli_forgetful.pel.json";
    {
        FILE* f = std::fopen(forgetful.c_str(), "w");
        std::fputs(
            "{\"version\": \"pel-1\","
            "\"variables\": [{\"name\": \"X\", \"domain\": [\"0\", \"1\"]}],"
            "\"cpds\": [{\"child\": \"X\", \"parents\": [], \"rows\": [[0.5, 0.5]]}],"
            "\"decisions\": ["
            "{\"name\": \"D1\", \"domain\": [\"a\", \"b\"], \"parents\": [\"X\"]},"
            "{\"name\": \"D2\", \"domain\": [\"a\", \"b\"], \"parents\": []}],"
            "\"utilities\": [{\"name\": \"U\", \"parents\": [\"D2\"], \"table\": [1.0, 0.0]}]}",
            f);
        std::fclose(f);
    }
    RunResult r = run("solve " + forgetful);
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("warning: added no-forgetting arc D1 -> D2") != string::npos);
    CHECK(r.output.find("warning: added no-forgetting arc X -> D2") != string::npos);
    CHECK(r.output.find("meu = 1.000000") != string::npos);
    std::remove(forgetful.c_str());
}

TEST_CASE("validate names perfect-recall violations") {
    const string ill = "/tmp/pel_cli_recall.pel.json";
    {
        FILE* f = std::fopen(ill.c_str(), "w");
        std::fputs(
            "{\"version\": \"pel-1\","
            "\"variables\": [{\"name\": \"X\", \"domain\": [\"0\", \"1\"]},"
            "{\"name\": \"Y\", \"domain\": [\"0\", \"1\"]}],"
            "\"cpds\": [{\"child\": \"X\", \"parents\": [], \"rows\": [[0.5, 0.5]]},"
            "{\"child\": \"Y\", \"parents\": [], \"rows\": [[0.5, 0.5]]}],"
            "\"agents\": [{\"name\": \"a\", \"stages\": [[\"X\", \"Y\"], [\"Y\"]]}]}",
            f);
        std::fclose(f);
    }
    RunResult r = run("validate " + ill);
    CHECK(r.exit_code == 1);
    CHECK(r.output.find("perfect-recall") != string::npos);
    CHECK(r.output.find("X") != string::npos);
    std::remove(ill.c_str());
}

TEST_CASE("validate reports cyclic networks") {
    const string cyclic = "/tmp/pel_cli_cycle.pel.json";
    {
        FILE* f = std::fopen(cyclic.c_str(), "w");
        std::fputs(
            "{\"version\": \"pel-1\","
            "\"variables\": [{\"name\": \"X\", \"domain\": [\"0\", \"1\"]},"
            "{\"name\": \"Y\", \"domain\": [\"0\", \"1\"]}],"
            "\"cpds\": ["
            "{\"child\": \"X\", \"parents\": [\"Y\"], \"rows\": [[0.5, 0.5], [0.5, 0.5]]},"
            "{\"child\": \"Y\", \"parents\": [\"X\"], \"rows\": [[0.5, 0.5], [0.5, 0.5]]}]}",
            f);
        std::fclose(f);
    }
    RunResult r = run("validate " + cyclic);
    CHECK(r.exit_code == 1);
    CHECK(r.output.find("cycle") != string::npos);
    std::remove(cyclic.c_str());
}

TEST_CASE("--max-states bounds the oracle path") {
    RunResult r = run("query " + fixture("crisis.pel.json") +
                      " \"V=true\" --oracle --max-states 16");
    CHECK(r.exit_code != 0);
    CHECK(r.output.find("state-space-too-large") != string::npos);

    RunResult ok = run("query " + fixture("crisis.pel.json") + " \"V=true\" --oracle");
    CHECK(ok.exit_code == 0);
    CHECK(ok.output.find("0.800000") != string::npos);
}

TEST_CASE("query of an influence diagram solves it on demand") {
    RunResult r = run("query " + fixture("crisis_id.pel.json") + " \"Bel[u,2] >= 0.8 (V=true)\"");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("0.958000") != string::npos);
}
