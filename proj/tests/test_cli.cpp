#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

namespace {

struct Run {
    int code = -1;
    std::string out;
};

Run run(const std::string& args) {
    const std::string cmd = std::string(LEVYH_CLI) + " " + args + " 2>/dev/null";
    Run r;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return r;
    char buf[4096];
    std::size_t got = 0;
    while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, got);
    const int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string data(const std::string& name) { return std::string(LEVYH_EXAMPLES) + "/" + name; }

std::vector<std::vector<std::string>> csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        rows.push_back(cells);
    }
    return rows;
}

}  // namespace

TEST(Cli, ResolventAtOrigin) {
    const auto r = run("resolvent --model " + data("brownian.json") + " --q 1 --x 0");
    ASSERT_EQ(r.code, 0);
    const auto rows = csv(r.out);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0], (std::vector<std::string>{"q", "x", "u_q", "closed_form", "abs_err"}));
    EXPECT_NEAR(std::stod(rows[1][2]), 0.7071068, 1e-7);
}

TEST(Cli, StableHTable) {
    const auto r = run("h --model " + data("stable.json") + " --x -2:2:0.1");
    ASSERT_EQ(r.code, 0);
    const auto rows = csv(r.out);
    ASSERT_EQ(rows.size(), 42u);
    EXPECT_EQ(rows[0], (std::vector<std::string>{"x", "h", "closed_form", "abs_err"}));
    bool found = false;
    for (const auto& row : rows)
        if (row[0] == "1") {
            found = true;
            EXPECT_NEAR(std::stod(row[1]), 0.7978846, 1e-7);
        }
    EXPECT_TRUE(found);
}

TEST(Cli, EmittedNumbersRoundTrip) {
    const auto r = run("h --model " + data("stable.json") + " --x 0.3,1.7");
    ASSERT_EQ(r.code, 0);
    const auto rows = csv(r.out);
    for (std::size_t i = 1; i < rows.size(); ++i)
        for (const auto& cell : rows[i]) {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.17g", std::stod(cell));
            EXPECT_EQ(std::stod(buf), std::stod(cell));
        }
}

TEST(Cli, RerunsAreByteIdenticalAcrossThreadCounts) {
    const std::string model = " --model " + data("stable.json");
    const auto a = run("killed --conditioned" + model + " --q 0.5,1 --x -1,1 --y -0.5,2 --threads 1");
    const auto b = run("killed --conditioned" + model + " --q 0.5,1 --x -1,1 --y -0.5,2 --threads 3");
    const auto c = run("killed --conditioned" + model + " --q 0.5,1 --x -1,1 --y -0.5,2 --threads 1");
    ASSERT_EQ(a.code, 0);
    EXPECT_EQ(a.out, b.out);
    EXPECT_EQ(a.out, c.out);
    const std::string mc = "invariance --model " + data("brownian.json") + " --x 1,2 --t 0.5 --n 2000 --dt 0.01 --seed 9";
    const auto m1 = run(mc + " --threads 1");
    const auto m4 = run(mc + " --threads 4");
    ASSERT_EQ(m1.code, 0);
    EXPECT_EQ(m1.out, m4.out);
}

TEST(Cli, ConfigFileMatchesFlags) {
    char path[] = "/tmp/levyh_cfgXXXXXX";
    const int fd = mkstemp(path);
    ASSERT_GE(fd, 0);
    const std::string cfg = R"({"model":{"model":"brownian","sigma":1.0},"q":[0.5],"x":[1.0]})";
    ASSERT_EQ(write(fd, cfg.data(), cfg.size()), static_cast<ssize_t>(cfg.size()));
    close(fd);
    const auto a = run(std::string("hitting --config ") + path);
    const auto b = run("hitting --model " + data("brownian.json") + " --q 0.5 --x 1");
    std::remove(path);
    ASSERT_EQ(a.code, 0);
    EXPECT_EQ(a.out, b.out);
}

TEST(Cli, GreenAndHStar) {
    const auto g = run("green --model " + data("brownian.json") + " --x 1 --y 1,2");
    ASSERT_EQ(g.code, 0);
    const auto rows = csv(g.out);
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_NEAR(std::stod(rows[1][2]), 2.0, 1e-6);
    EXPECT_NEAR(std::stod(rows[2][2]), 4.0, 1e-6);
    const auto h = run("hstar --model " + data("brownian.json") + " --x 3");
    ASSERT_EQ(h.code, 0);
    EXPECT_NEAR(std::stod(csv(h.out).at(1).at(1)), 6.0, 1e-5);
}

TEST(Cli, PsiAndRegularity) {
    const auto p = run("psi --model " + data("stable.json") + " --lambda 0,1");
    ASSERT_EQ(p.code, 0);
    EXPECT_EQ(p.out, "lambda,re_psi,im_psi\n0,0,0\n1,1,0\n");
    const auto r = run("regularity --model " + data("brownian.json") + " --q 1");
    ASSERT_EQ(r.code, 0);
    EXPECT_NE(r.out.find(",pass"), std::string::npos);
}

TEST(Cli, VerifyReportsTheCrossIdentity) {
    const auto r = run("verify --model " + data("brownian.json") + " --q 0.5,1 --x -2,-1,1,2");
    EXPECT_EQ(r.code, 2);
    for (const auto& row : csv(r.out)) {
        if (row.size() < 7 || row[0] == "identity") continue;
        if (row[0] == "cross_resolvent") continue;
        EXPECT_EQ(row.back(), "true") << row[0] << ' ' << row[1];
    }
}

TEST(Cli, SimulateEmitsPaths) {
    const auto r = run("simulate --model " + data("brownian.json") + " --x 1 --t 1 --n 100 --dt 0.1 --seed 1 --paths 2");
    ASSERT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("x0,path,step,time,value,hit"), std::string::npos);
}

TEST(Cli, ConditionTable) {
    const auto r = run("condition --model " + data("brownian.json") + " --x 1 --q 0.5 --t 1 --n 4000 --dt 0.01 --seed 4");
    ASSERT_EQ(r.code, 0);
    EXPECT_GT(csv(r.out).size(), 7u);
}

TEST(Cli, ExitCodes) {
    const std::string b = " --model " + data("brownian.json");
    EXPECT_EQ(run("").code, 1);
    EXPECT_EQ(run("frobnicate").code, 1);
    EXPECT_EQ(run("h --x 1").code, 1);
    EXPECT_EQ(run("h" + b + " --x 1:0:0.5x").code, 1);
    EXPECT_EQ(run("resolvent" + b + " --q 0 --x 1").code, 1);
    EXPECT_EQ(run("h --model-json '{\"model\":\"brownian\",\"sigma\":-1}' --x 1").code, 1);
    EXPECT_EQ(run("invariance" + b + " --x 1 --t 1 --n 10 --dt 0.1").code, 1);
    EXPECT_EQ(run("resolvent --model-json '{\"model\":\"brownian_jumps\",\"sigma\":1,\"atoms\":[{\"size\":1,\"rate\":1}]}'"
                  " --max-panels 2 --q 1 --x 3").code,
              2);
    EXPECT_EQ(run("condition" + b + " --x 1 --q 1e-9 --t 1 --n 100 --dt 0.01 --seed 1").code, 3);
}
