#include <sys/wait.h>

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "lfdeblur/config_io.hpp"
#include "lfdeblur/light_field.hpp"
#include "lfdeblur/model/network.hpp"
#include "lfdeblur/png_io.hpp"
#include "test_support.hpp"

using namespace lfdeblur;
using namespace lfdeblur::testsup;
namespace fs = std::filesystem;

namespace {

// The tool under test; the build injects its absolute path.
const char* kCli = LFDEBLUR_CLI_BIN;

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(bool(in));
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// Runs the binary through the shell, captures stdout+stderr into `log`.
int run_cli(const std::string& args, const std::string& log) {
  const std::string cmd = std::string(kCli) + " " + args + " > " + log + " 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

LightField make_scene(DetRng& rng, const std::string& dir, int64_t U, int64_t V, int64_t X,
                      int64_t Y) {
  LightField lf = random_lf(rng, U, V, X, Y, /*quantized=*/true);
  save_light_field(lf, dir);
  return lf;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("usage problems exit 2, help exits 0") {
  TempDir td;
  const std::string log = td.sub("log.txt");
  CHECK(run_cli("", log) == 2);
  CHECK(run_cli("frobnicate", log) == 2);
  CHECK(run_cli("synth --no-such-flag", log) == 2);
  CHECK(run_cli("synth", log) == 2);  // required flags missing
  CHECK(run_cli("--help", log) == 0);
  CHECK(slurp(log).find("synth") != std::string::npos);
}

TEST_CASE("runtime failures exit 1 with an error line") {
  TempDir td;
  const std::string log = td.sub("log.txt");
  fs::create_directories(td.sub("empty"));
  CHECK(run_cli("synth --in " + td.sub("empty") + " --out " + td.sub("out"), log) == 1);
  CHECK(slurp(log).find("error:") != std::string::npos);

  DetRng rng(31);
  make_scene(rng, td.sub("scene"), 2, 2, 12, 12);
  CHECK(run_cli("slice --in " + td.sub("scene") + " --out " + td.sub("s.png") +
                    " --sai 0,0 --micro 1,1",
                log) == 1);

  std::ofstream(td.sub("bogus.ckpt")) << "not a checkpoint";
  CHECK(run_cli("infer --ckpt " + td.sub("bogus.ckpt") + " --in " + td.sub("scene") + " --out " +
                    td.sub("restored"),
                log) == 1);
  CHECK(slurp(log).find("checkpoint") != std::string::npos);

  fs::create_directories(td.sub("data"));
  CHECK(run_cli("train --data " + td.sub("data") + " --out " + td.sub("run") +
                    " --set nosuch.key=1",
                log) == 1);
  CHECK(slurp(log).find("nosuch.key") != std::string::npos);
}

TEST_CASE("synth layout is reproducible per seed") {
  TempDir td;
  const std::string log = td.sub("log.txt");
  DetRng rng(32);
  const LightField sharp = make_scene(rng, td.sub("scene"), 3, 3, 16, 16);

  const std::string common = "synth --in " + td.sub("scene") + " --samples 5 --trans-mag 0.8 ";
  CHECK(run_cli(common + "--seed 7 --out " + td.sub("a"), log) == 0);
  CHECK(run_cli(common + "--seed 7 --out " + td.sub("b"), log) == 0);
  CHECK(run_cli(common + "--seed 8 --out " + td.sub("c"), log) == 0);

  for (const char* f : {"blur/view_00_00.png", "blur/view_02_02.png", "sharp/view_00_00.png",
                        "trajectory.txt"}) {
    CAPTURE(f);
    CHECK(slurp(td.sub("a/") + f) == slurp(td.sub("b/") + f));
  }
  CHECK(slurp(td.sub("a/blur/view_01_01.png")) != slurp(td.sub("c/blur/view_01_01.png")));

  // the sharp copy is the input, unchanged
  const LightField copied = load_light_field(td.sub("a/sharp"));
  CHECK(bit_equal(copied.data(), sharp.data()));
}

TEST_CASE("slice writes the requested slab at PNG size") {
  TempDir td;
  const std::string log = td.sub("log.txt");
  DetRng rng(33);
  const LightField lf = make_scene(rng, td.sub("scene"), 3, 3, 12, 18);

  CHECK(run_cli("slice --in " + td.sub("scene") + " --out " + td.sub("view.png") + " --sai 1,2",
                log) == 0);
  const Image view = read_png(td.sub("view.png"));
  CHECK(view.dim(0) == 12);
  CHECK(view.dim(1) == 18);
  CHECK(max_abs_diff(view, lf.sai(1, 2)) < 1e-12);  // quantized source survives exactly

  // vertical epi spans (U, Y); upscale doubles both
  CHECK(run_cli("slice --in " + td.sub("scene") + " --out " + td.sub("epi.png") +
                    " --epi-v 1,5 --upscale 2",
                log) == 0);
  const Image epi_img = read_png(td.sub("epi.png"));
  CHECK(epi_img.dim(0) == 6);
  CHECK(epi_img.dim(1) == 36);
}

TEST_CASE("info totals match the library parameter count") {
  TempDir td;
  const std::string log = td.sub("log.txt");
  CHECK(run_cli("info --set model.channels=8 --set model.attention_hidden=16", log) == 0);
  const std::string out = slurp(log);

  ModelConfig cfg;
  cfg.channels = 8;
  cfg.attention_hidden = 16;
  CHECK(out.find("model.channels = 8") != std::string::npos);
  CHECK(out.find("total") != std::string::npos);
  CHECK(out.find(std::to_string(count_params(cfg).total)) != std::string::npos);
}

TEST_CASE("synth, train, infer, eval chain end to end") {
  TempDir td;
  const std::string log = td.sub("log.txt");
  DetRng rng(34);
  make_scene(rng, td.sub("raw/alpha"), 3, 3, 22, 24);
  make_scene(rng, td.sub("raw/beta"), 3, 3, 22, 24);

  CHECK(run_cli("synth --in " + td.sub("raw") + " --out " + td.sub("cooked") +
                    " --dof 3 --samples 4 --trans-mag 0.6 --seed 3",
                log) == 0);
  CHECK(fs::exists(td.sub("cooked/alpha/blur/view_00_00.png")));
  CHECK(fs::exists(td.sub("cooked/beta/sharp/view_02_02.png")));

  const std::string model_sets =
      " --set model.views_u=3 --set model.views_v=3"
      " --set model.channels=4 --set model.num_blocks=1 --set model.gen_hidden=2"
      " --set model.attention_hidden=8";
  CHECK(run_cli("train --data " + td.sub("cooked") + " --out " + td.sub("run") + model_sets +
                    " --set train.patch_x=12 --set train.patch_y=12 --set train.batch_size=2"
                    " --set train.total_epochs=2 --set train.patches_per_scene=2"
                    " --set train.warm_epochs=10",
                log) == 0);
  const std::string train_out = slurp(log);
  CHECK(train_out.find("step=1 ") != std::string::npos);
  CHECK(train_out.find("lr=") != std::string::npos);
  CHECK(train_out.find("done:") != std::string::npos);
  CHECK(fs::exists(td.sub("run/last/model.ckpt")));
  CHECK(fs::exists(td.sub("run/train.log")));
  CHECK(slurp(td.sub("run/config.txt")).find("model.channels = 4") != std::string::npos);

  for (const char* scene : {"alpha", "beta"}) {
    CHECK(run_cli("infer --ckpt " + td.sub("run/last") + " --in " + td.sub("cooked/") + scene +
                      "/blur --out " + td.sub("restored/") + scene,
                  log) == 0);
    fs::create_directories(td.sub("gt"));
    fs::copy(td.sub("cooked/") + scene + "/sharp", td.sub("gt/") + scene,
             fs::copy_options::recursive);
  }
  CHECK(fs::exists(td.sub("restored/alpha/view_01_01.png")));

  CHECK(run_cli("eval --pred " + td.sub("restored") + " --gt " + td.sub("gt") + " --report " +
                    td.sub("report.txt"),
                log) == 0);
  const std::string report = slurp(td.sub("report.txt"));
  CHECK(report.find("alpha") != std::string::npos);
  CHECK(report.find("beta") != std::string::npos);
  CHECK(slurp(log) == report);

  // the MEAN row carries four finite numeric columns
  std::istringstream lines(report);
  std::string line, mean_line;
  while (std::getline(lines, line))
    if (line.rfind("MEAN", 0) == 0) mean_line = line;
  REQUIRE(!mean_line.empty());
  std::istringstream fields(mean_line);
  std::string label;
  double p = 0, s = 0, n = 0, l = 0;
  fields >> label >> p >> s >> n >> l;
  CHECK(bool(fields));
  CHECK(std::isfinite(p));
  CHECK(s <= 1.0);
  CHECK(n <= 1.0);
  CHECK(l >= 0.0);

  // info reads the architecture back out of the checkpoint
  CHECK(run_cli("info --ckpt " + td.sub("run/last"), log) == 0);
  ModelConfig tiny;
  tiny.views_u = 3;
  tiny.views_v = 3;
  tiny.channels = 4;
  tiny.num_blocks = 1;
  tiny.gen_hidden = 2;
  tiny.attention_hidden = 8;
  CHECK(slurp(log).find(std::to_string(count_params(tiny).total)) != std::string::npos);
}

}  // TEST_SUITE
