#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

struct Result {
    int code = -1;
    std::string out;
};

Result cli(const std::string& args) {
    std::string cmd = std::string(DNP3LAB_CLI) + " " + args + " 2>&1";
    Result r;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return r;
    std::array<char, 4096> buf{};
    std::size_t n;
    while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
    int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

fs::path scratch(const std::string& name) {
    auto p = fs::temp_directory_path() / ("dnp3lab_cli_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

void write(const fs::path& p, const std::string& text) {
    FILE* f = fopen(p.c_str(), "wb");
    fwrite(text.data(), 1, text.size(), f);
    fclose(f);
}

const std::string kScenario = R"({"schema": "dnp3lab.scenario", "version": 1, "name": "UC1_10OS_30",
  "use_case": 1, "outstations": 10, "polling_interval_s": 30, "run_duration_s": 90,
  "attack_start_s": 30, "attack_stop_s": 60})";

}  // namespace

TEST(Cli, InspectGoldenDirectOperate) {
    auto r = cli("inspect '05 64 0e c4 04 00 01 00 88 c8 c0 c0 05 02 07 00 01 00 41 95 15'");
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("fc=DIRECT_OPERATE (0x05)"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("BO start=7 count=1 : 41"), std::string::npos);
}

TEST(Cli, InspectReportsCorruptChunkWithOffset) {
    auto r = cli("inspect '05 64 0e c4 04 00 01 00 88 c8 c0 c0 05 02 07 00 01 00 40 95 15'");
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("CRC MISMATCH at chunk 0"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("offset 10"), std::string::npos);
}

TEST(Cli, InspectRejectsGarbage) { EXPECT_EQ(cli("inspect not-hex").code, 2); }

TEST(Cli, RunWritesNamedArtifactsAndInspectListsCapture) {
    auto dir = scratch("run");
    write(dir / "UC1_10OS_30.scenario", kScenario);
    auto r = cli("run " + (dir / "UC1_10OS_30.scenario").string() + " --out-dir " + (dir / "out").string());
    ASSERT_EQ(r.code, 0) << r.out;
    for (const char* ext : {".capture.jsonl", ".alerts.log", ".metrics.json", ".metrics.txt", ".manifest.json"})
        EXPECT_TRUE(fs::exists(dir / "out" / (std::string("UC1_10OS_30") + ext))) << ext;
    auto listing = cli("inspect " + (dir / "out" / "UC1_10OS_30.capture.jsonl").string());
    EXPECT_EQ(listing.code, 0);
    EXPECT_NE(listing.out.find("ARP reply"), std::string::npos);
    EXPECT_NE(listing.out.find("DIRECT_OPERATE"), std::string::npos);
}

TEST(Cli, SeedAndOverrideFlags) {
    auto dir = scratch("flags");
    write(dir / "s.scenario", kScenario);
    auto r = cli("run " + (dir / "s.scenario").string() + " --seed 9 --override name=tuned --out-dir " +
                 (dir / "out").string());
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_TRUE(fs::exists(dir / "out" / "tuned.manifest.json"));
    EXPECT_NE(r.out.find("seed 9"), std::string::npos);
}

TEST(Cli, InvalidConfigExitsTwoWithDiagnostics) {
    auto dir = scratch("invalid");
    write(dir / "bad.scenario", kScenario);
    auto r = cli("run " + (dir / "bad.scenario").string() + " --override attack_stop_s=10 --out-dir " +
                 (dir / "out").string());
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.out.find("attack_stop_s"), std::string::npos) << r.out;
    EXPECT_EQ(cli("run /nonexistent.scenario").code, 2);
    EXPECT_EQ(cli("frobnicate").code, 2);
}

TEST(Cli, SweepAndCompare) {
    auto dir = scratch("sweep");
    write(dir / "m.sweep", R"({"schema": "dnp3lab.sweep", "version": 1, "use_cases": [2], "outstations": [2],
        "polling_intervals_s": [30], "exclude": [],
        "base": {"run_duration_s": 90, "attack_start_s": 30, "attack_stop_s": 60}})");
    auto r = cli("sweep " + (dir / "m.sweep").string() + " --out-dir " + (dir / "out").string());
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find("UC2_2OS_30"), std::string::npos);
    EXPECT_TRUE(fs::exists(dir / "out" / "sweep.json"));
    auto m = (dir / "out" / "UC2_2OS_30.metrics.json").string();
    auto c = cli("compare " + m + " " + m);
    EXPECT_EQ(c.code, 0);
    EXPECT_NE(c.out.find("retransmission.r_r"), std::string::npos);
}
