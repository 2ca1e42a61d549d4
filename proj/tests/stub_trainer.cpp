// Copyright 2026 The tinyvox Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Scriptable trainer used by the tests. Usage:
//   stub_trainer [--mode M] [--optimum LR] [--fail-lr LR] [--record FILE] <run_config.json> <output_dir>
// It parses the config with the toolkit's reader, then behaves per mode:
//   echo       fixed valid report
//   convex     dev EER 0.05 + 0.01 * (log10(lr) - log10(optimum))^2
//   fail-at    exit 1 when max_lr equals --fail-lr, otherwise convex
//   seeds      dev EER 0.09 + 0.01 * seed
//   exit       exit code 3
//   malformed  report.json that is not JSON
//   schema     report with an empty history
//   no-report  exit 0 without writing a report
//   failed     report with status "failed"
//   sleep      sleep for 30 s

#include <fcntl.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>

#include "tinyvox/orchestrator.hpp"

using tinyvox::Json;

int main(int argc, char** argv) {
  std::string mode = "echo", record;
  double optimum = 1e-4, fail_lr = 1e-2;
  int i = 1;
  for (; i + 2 < argc && std::string(argv[i]).rfind("--", 0) == 0; i += 2) {
    const std::string flag = argv[i], value = argv[i + 1];
    if (flag == "--mode") {
      mode = value;
    } else if (flag == "--optimum") {
      optimum = std::stod(value);
    } else if (flag == "--fail-lr") {
      fail_lr = std::stod(value);
    } else if (flag == "--record") {
      record = value;
    } else {
      std::cerr << "unknown flag " << flag << '\n';
      return 64;
    }
  }
  if (argc - i != 2) {
    std::cerr << "usage: stub_trainer [flags] <run_config.json> <output_dir>\n";
    return 64;
  }
  const std::string config_path = argv[i], out_dir = argv[i + 1];

  tinyvox::RunConfig cfg;
  try {
    std::ifstream in(config_path);
    cfg = Json::parse(in).get<tinyvox::RunConfig>();
    cfg.validate();
  } catch (const std::exception& e) {
    std::cerr << "bad config: " << e.what() << '\n';
    return 65;
  }
  if (!record.empty()) {
    // One write per line so concurrent runs do not interleave.
    const std::string line = Json(cfg).dump() + "\n";
    const int fd = ::open(record.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
    if (fd < 0 || ::write(fd, line.data(), line.size()) != static_cast<ssize_t>(line.size())) return 66;
    ::close(fd);
  }
  const auto report_path = std::filesystem::path(out_dir) / "report.json";
  auto write = [&](const std::string& text) {
    std::ofstream out(report_path);
    out << text;
  };
  auto ok_report = [&](double eer) {
    write(Json{{"status", "ok"},
               {"best_validation_eer", eer},
               {"best_checkpoint_step", cfg.n_steps},
               {"dev_eer", eer},
               {"history", Json::array({Json::array({cfg.n_steps, eer})})}}
              .dump());
  };
  const double lr = cfg.schedule.max_lr;

  if (mode == "echo") {
    write(R"({"status":"ok","best_validation_eer":0.2,"best_checkpoint_step":5000,"dev_eer":0.25,)"
          R"("history":[[5000,0.2],[10000,0.3]],"embeddings_path":"emb.txt"})");
  } else if (mode == "convex" || mode == "fail-at") {
    if (mode == "fail-at" && std::abs(lr - fail_lr) <= 1e-12 * fail_lr) return 1;
    const double d = std::log10(lr) - std::log10(optimum);
    ok_report(0.05 + 0.01 * d * d);
  } else if (mode == "seeds") {
    ok_report(0.09 + 0.01 * static_cast<double>(cfg.seed));
  } else if (mode == "exit") {
    return 3;
  } else if (mode == "malformed") {
    write("{not json");
  } else if (mode == "schema") {
    write(R"({"status":"ok","best_validation_eer":0.2,"best_checkpoint_step":1,"dev_eer":0.2,"history":[]})");
  } else if (mode == "no-report") {
  } else if (mode == "failed") {
    write(R"({"status":"failed","error":"diverged"})");
  } else if (mode == "sleep") {
    std::this_thread::sleep_for(std::chrono::seconds(30));
  } else {
    std::cerr << "unknown mode " << mode << '\n';
    return 64;
  }
  std::cout << "stub trainer finished (" << mode << ")\n";
  return 0;
}
