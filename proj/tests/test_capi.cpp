#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN

#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>

#include "doctest.h"
#include "prefgame.h"

namespace {

const char* kInstanceText =
    "[game]\n"
    "eta = 1\n"
    "prompts = 1\n"
    "\n"
    "[prompt 0]\n"
    "weight = 1\n"
    "actions = 3\n"
    "pi0 = 0.5 0.25 0.25\n"
    "\n"
    "[pref 0]\n"
    "upper = 0.75 0.25 0.75\n";

const char* kClassText =
    "[class]\n"
    "kind = finite\n"
    "prompts = 1\n"
    "actions = 3\n"
    "members = 2\n"
    "realizable = 1\n"
    "\n"
    "[member 0]\n"
    "upper 0 = 0.75 0.25 0.75\n"
    "\n"
    "[member 1]\n"
    "upper 0 = 0.6 0.4 0.6\n";

struct TempDir {
  std::string dir;
  TempDir() {
    dir = "/tmp/prefgame_capi_" + std::to_string(::getpid());
    std::string cmd = "mkdir -p " + dir;
    REQUIRE(std::system(cmd.c_str()) == 0);
  }
  ~TempDir() {
    std::string cmd = "rm -rf " + dir;
    int rc = std::system(cmd.c_str());
    (void)rc;
  }
  std::string write(const std::string& name, const std::string& text) const {
    std::string path = dir + "/" + name;
    std::FILE* f = std::fopen(path.c_str(), "w");
    REQUIRE(f != nullptr);
    std::fwrite(text.data(), 1, text.size(), f);
    std::fclose(f);
    return path;
  }
};

std::string take(char* s) {
  REQUIRE(s != nullptr);
  std::string out = s;
  pfg_string_free(s);
  return out;
}

}  // namespace

TEST_CASE("instance lifecycle and error reporting") {
  pfg_instance* inst = nullptr;
  REQUIRE(pfg_instance_parse(kInstanceText, &inst) == PFG_OK);
  REQUIRE(inst != nullptr);
  pfg_instance_free(inst);

  inst = nullptr;
  CHECK(pfg_instance_parse("not an instance", &inst) == PFG_ERR_PARSE);
  CHECK(inst == nullptr);
  CHECK(std::strlen(pfg_last_error()) > 0);

  CHECK(pfg_instance_parse(nullptr, &inst) == PFG_ERR_INVALID_ARGUMENT);
  CHECK(pfg_instance_parse(kInstanceText, nullptr) == PFG_ERR_INVALID_ARGUMENT);
  CHECK(pfg_instance_load("/nonexistent/file.txt", &inst) == PFG_ERR_IO);

  pfg_instance_free(nullptr);  // must be a no-op
  pfg_string_free(nullptr);
}

TEST_CASE("solve-nash emits a certified policy as json") {
  pfg_instance* inst = nullptr;
  REQUIRE(pfg_instance_parse(kInstanceText, &inst) == PFG_OK);
  char* out = nullptr;
  REQUIRE(pfg_solve_nash(inst, 0.0, 0.0, &out) == PFG_OK);
  std::string json = take(out);
  CHECK(json.find("\"duality_gap\"") != std::string::npos);
  CHECK(json.find("\"policy\"") != std::string::npos);
  CHECK(json.find("\"converged\":true") != std::string::npos);

  // Overriding eta changes the solved game.
  char* out2 = nullptr;
  REQUIRE(pfg_solve_nash(inst, 5.0, 0.0, &out2) == PFG_OK);
  std::string json2 = take(out2);
  CHECK(json2.find("\"eta\":5.0") != std::string::npos);
  CHECK(json2 != json);

  // Any non-positive eta is the keep-instance-eta sentinel.
  char* out3 = nullptr;
  REQUIRE(pfg_solve_nash(inst, -1.0, 0.0, &out3) == PFG_OK);
  CHECK(take(out3) == json);

  CHECK(pfg_solve_nash(nullptr, 0.0, 0.0, &out) == PFG_ERR_INVALID_ARGUMENT);
  CHECK(pfg_solve_nash(inst, 0.0, 0.0, nullptr) == PFG_ERR_INVALID_ARGUMENT);
  pfg_instance_free(inst);
}

TEST_CASE("collect returns the dataset text deterministically") {
  pfg_instance* inst = nullptr;
  REQUIRE(pfg_instance_parse(kInstanceText, &inst) == PFG_OK);
  char* a = nullptr;
  char* b = nullptr;
  REQUIRE(pfg_collect(inst, "instance", 5, 42, &a) == PFG_OK);
  REQUIRE(pfg_collect(inst, "instance", 5, 42, &b) == PFG_OK);
  std::string ta = take(a), tb = take(b);
  CHECK(ta == tb);
  CHECK(ta.rfind("# rng=splitmix64 seed=42", 0) == 0);
  int lines = 0;
  for (char c : ta)
    if (c == '\n') lines++;
  CHECK(lines == 6);  // header + five records

  char* c = nullptr;
  REQUIRE(pfg_collect(inst, "cyclic:0.75", 3, 7, &c) == PFG_OK);
  take(c);
  CHECK(pfg_collect(inst, "cyclic:nope", 3, 7, &c) == PFG_ERR_PARSE);
  // Null oracle falls back to the instance's own table.
  char* d = nullptr;
  REQUIRE(pfg_collect(inst, nullptr, 5, 42, &d) == PFG_OK);
  CHECK(take(d) == ta);
  CHECK(pfg_collect(inst, "instance", 3, 7, nullptr) == PFG_ERR_INVALID_ARGUMENT);
  pfg_instance_free(inst);
}

TEST_CASE("experiments run through the c api with overrides") {
  TempDir tmp;
  std::string inst_path = tmp.write("instance.txt", kInstanceText);
  std::string class_path = tmp.write("class.txt", kClassText);
  std::string config =
      "[experiment]\n"
      "instance = " + inst_path + "\n" +
      "class = " + class_path + "\n" +
      "algorithm = offline_vs\n"
      "replicates = 1\n"
      "\n[offline]\n"
      "n = 30\n";

  const char* overrides[] = {"experiment.replicates=2", "experiment.base_seed=9"};
  char* jsonl = nullptr;
  char* csv = nullptr;
  REQUIRE(pfg_experiment_run(config.c_str(), overrides, 2, "offline", &jsonl, &csv) == PFG_OK);
  std::string out = take(jsonl);
  std::string summary = take(csv);
  int lines = 0;
  for (char ch : out)
    if (ch == '\n') lines++;
  CHECK(lines == 2);  // replicate override applied
  CHECK(out.find("\"seed\":9") != std::string::npos);
  CHECK(summary.rfind("algorithm,", 0) == 0);

  // Mode gating: an offline config cannot run under the online mode.
  CHECK(pfg_experiment_run(config.c_str(), nullptr, 0, "online", &jsonl, &csv) ==
        PFG_ERR_INVALID_ARGUMENT);
  CHECK(pfg_experiment_run(config.c_str(), nullptr, 0, "sweep", &jsonl, &csv) ==
        PFG_ERR_INVALID_ARGUMENT);
  CHECK(pfg_experiment_run(config.c_str(), nullptr, 0, "bogus", &jsonl, &csv) ==
        PFG_ERR_INVALID_ARGUMENT);
  CHECK(pfg_experiment_run(nullptr, nullptr, 0, nullptr, &jsonl, &csv) ==
        PFG_ERR_INVALID_ARGUMENT);

  // Replicate failures surface as a convergence status with outputs intact.
  const char* starve[] = {"offline.solver_max_iter=2",
                          "experiment.algorithm=offline_bonus"};
  jsonl = nullptr;
  csv = nullptr;
  CHECK(pfg_experiment_run(config.c_str(), starve, 2, nullptr, &jsonl, &csv) ==
        PFG_ERR_CONVERGENCE);
  std::string failed = take(jsonl);
  take(csv);
  CHECK(failed.find("\"error\"") != std::string::npos);
}

TEST_CASE("acceptance criteria are callable one at a time") {
  char* table = nullptr;
  int passed = -1;
  REQUIRE(pfg_accept(1.0, 7, &table, &passed) == PFG_OK);
  std::string text = take(table);
  CHECK(passed == 1);
  CHECK(text.find("C07") != std::string::npos);
  CHECK(text.find("PASS") != std::string::npos);

  CHECK(pfg_accept(0.0, 0, &table, &passed) == PFG_ERR_INVALID_ARGUMENT);
  CHECK(pfg_accept(1.0, 99, &table, &passed) == PFG_ERR_INVALID_ARGUMENT);
  CHECK(pfg_accept(1.0, 7, nullptr, &passed) == PFG_ERR_INVALID_ARGUMENT);
}
