#include "kghait/training_log.hpp"

#include <fmt/format.h>

#include <fstream>
#include <sstream>
#include <string>

#include "kghait/error.hpp"

namespace kghait {

void write_training_log(const std::filesystem::path& path, const TrainingLog& log) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write training log: " + path.string());
  out << "epoch,loss,val_mr,val_mrr,val_h1,val_h3,val_h10\n";
  for (const auto& r : log.epochs) {
    out << fmt::format("{},{:.17g}", r.epoch, r.loss);
    if (r.validation) {
      const auto& v = *r.validation;
      out << fmt::format(",{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}", v.mr, v.mrr, v.hits1,
                         v.hits3, v.hits10);
    } else {
      out << ",,,,,";
    }
    out << '\n';
  }
}

TrainingLog read_training_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open training log: " + path.string());
  TrainingLog log;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line_number == 1 || line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    if (fields.size() != 7) {
      throw ParseError(line_number, path.string() + ": expected 7 columns");
    }
    try {
      EpochRecord r;
      r.epoch = std::stoul(fields[0]);
      r.loss = std::stod(fields[1]);
      if (!fields[2].empty()) {
        r.validation = ValidationMetrics{std::stod(fields[2]), std::stod(fields[3]),
                                         std::stod(fields[4]), std::stod(fields[5]),
                                         std::stod(fields[6])};
      }
      log.epochs.push_back(r);
    } catch (const std::logic_error&) {
      throw ParseError(line_number, path.string() + ": malformed number");
    }
  }
  return log;
}

}  // namespace kghait
