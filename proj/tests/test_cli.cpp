// Drives the relight binary end to end: generation, both training stages,
// relighting, evaluation, verification and the sunpos utility, checking
// outputs and exit codes (0 ok, 1 usage, 2 verify failure, 3 I/O).

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "relight/dataio.hpp"
#include "relight/rng.hpp"

namespace fs = std::filesystem;

namespace {

int failures = 0;

void check(bool ok, const std::string& what) {
  std::printf("%s %s\n", ok ? "[ ok ]" : "[FAIL]", what.c_str());
  if (!ok) ++failures;
}

std::string binary;

int run(const std::string& args, std::string* output = nullptr) {
  const std::string cmd = binary + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return -1;
  std::string out;
  char buf[4096];
  while (size_t n = fread(buf, 1, sizeof(buf), pipe)) out.append(buf, n);
  if (output) *output = out;
  const int status = pclose(pipe);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: test_cli <relight-binary>\n");
    return 1;
  }
  binary = argv[1];

  const fs::path work =
      fs::temp_directory_path() /
      ("relight_cli_" + std::to_string(relight::Rng(std::random_device{}()).bits()));
  fs::create_directories(work);

  // --- gen ---
  const std::string data = (work / "data").string();
  check(run("gen --scenes 6 --size 32x32 --seed 3 --out " + data) == 0, "gen succeeds");
  check(fs::exists(work / "data" / "manifest.json"), "gen writes a manifest");

  const std::string data2 = (work / "data2").string();
  run("gen --scenes 6 --size 32x32 --seed 3 --out " + data2);
  check(slurp(work / "data" / "manifest.json") == slurp(work / "data2" / "manifest.json") &&
            slurp(work / "data" / "scene0002" / "p04_rgb.ppm") ==
                slurp(work / "data2" / "scene0002" / "p04_rgb.ppm"),
        "gen is byte-identical for identical flags");

  check(run("gen --scenes 2 --positions '0,95' --out " + (work / "bad").string()) == 1,
        "gen rejects below-horizon positions with a usage error");

  // --- train-sunest / train ---
  const std::string sunest = (work / "sunest.ckpt").string();
  const std::string manifest = (work / "data" / "manifest.json").string();
  check(run("train-sunest --data " + manifest + " --out " + sunest +
            " --epochs 2 --seed 1 --log " + (work / "sun.csv").string()) == 0,
        "train-sunest succeeds");
  {
    const std::string log = slurp(work / "sun.csv");
    check(log.rfind("step,epoch,", 0) == 0 && log.find('\n') != std::string::npos,
          "training log is line-oriented csv");
  }

  const std::string model = (work / "model.ckpt").string();
  check(run("train --data " + manifest + " --sunest " + sunest + " --out " + model +
            " --epochs 2 --seed 1") == 0,
        "train succeeds");
  check(run("train --data " + manifest + " --out " + (work / "x.ckpt").string() +
            " --epochs 1") == 1,
        "train without --sunest is a usage error");
  check(run("train --data " + manifest + " --ablate no-sun-loss --out " +
            (work / "nosun.ckpt").string() + " --epochs 1 --seed 1") == 0,
        "train --ablate no-sun-loss runs without a sunest checkpoint");
  check(run("train --data " + manifest + " --sunest " + sunest + " --ablate depth-only" +
            " --out " + (work / "depthonly.ckpt").string() + " --epochs 1 --seed 1") == 0,
        "train --ablate depth-only succeeds");

  // --- relight ---
  const std::string out_img = (work / "relit.ppm").string();
  const std::string depth = (work / "data" / "scene0000" / "depth.pgm").string();
  const std::string semseg = (work / "data" / "scene0000" / "semseg.pgm").string();
  check(run("relight --model " + model + " --depth " + depth + " --semseg " + semseg +
            " --azimuth -60 --zenith 60 --out " + out_img) == 0,
        "relight writes an image");
  check(fs::exists(out_img), "relight output exists");
  check(run("relight --model " + model + " --depth " + depth + " --semseg " + semseg +
            " --azimuth 0 --zenith 95 --out " + out_img) == 1,
        "relight rejects a below-horizon target");
  {
    const std::string out2 = (work / "relit2.ppm").string();
    run("relight --model " + model + " --depth " + depth + " --semseg " + semseg +
        " --azimuth -60 --zenith 60 --out " + out2);
    check(slurp(out_img.c_str()).size() > 0 &&
              slurp((work / "relit2.ppm")) == slurp((work / "relit.ppm")),
          "relight is deterministic");
  }

  // --- eval ---
  const std::string report = (work / "report.txt").string();
  check(run("eval --model " + model + " --label full --data " + manifest + " --report " +
            report + " --baseline") == 0,
        "eval succeeds");
  {
    const std::string text = slurp(report);
    check(text.rfind("relight-mssim-report/1", 0) == 0, "report is schema-stamped");
    check(text.find("[position") != std::string::npos &&
              text.find("[global]") != std::string::npos,
          "report has position blocks and a global block");
    check(text.find("baseline-mean-train:") != std::string::npos,
          "report carries the baseline series");
  }

  // Three-row comparison report.
  check(run("eval --model " + model + " --model " + (work / "depthonly.ckpt").string() +
            " --model " + (work / "nosun.ckpt").string() +
            " --label full --label depth-only --label no-sun-loss --data " + manifest +
            " --report " + (work / "cmp.txt").string()) == 0,
        "multi-model eval succeeds");
  {
    const std::string text = slurp(work / "cmp.txt");
    check(text.find("series: full depth-only no-sun-loss") != std::string::npos,
          "comparison report lists all three rows");
  }

  // --- verify ---
  check(run("verify --suite solar") == 0, "verify solar passes");
  check(run("verify --suite nope") == 1, "unknown suite is a usage error");

  // --- sunpos ---
  {
    std::string out;
    check(run("sunpos --lat 39.742476 --lon -105.1786 --time 2003-10-17T19:30:30Z", &out) ==
              0,
          "sunpos succeeds");
    check(out.find("azimuth:") != std::string::npos &&
              out.find("zenith: 50.1") != std::string::npos,
          "sunpos prints the azimuth/zenith pair");
    check(run("sunpos --lat 0 --lon 0 --time yesterday") == 1,
          "malformed time is a usage error");
  }

  // --- I/O failures ---
  check(run("eval --model " + (work / "missing.ckpt").string() + " --data " + manifest +
            " --report " + report) == 3,
        "missing checkpoint is an I/O error");
  {
    std::ofstream trunc(work / "trunc.ckpt", std::ios::binary);
    trunc << "RLCKPT01garbage";
  }
  check(run("relight --model " + (work / "trunc.ckpt").string() + " --depth " + depth +
            " --semseg " + semseg + " --azimuth 0 --zenith 30 --out " + out_img) == 3,
        "corrupt checkpoint is an I/O error");

  fs::remove_all(work);
  std::printf("%s\n", failures == 0 ? "ALL CLI CHECKS PASSED" : "CLI CHECKS FAILED");
  return failures == 0 ? 0 : 1;
}
