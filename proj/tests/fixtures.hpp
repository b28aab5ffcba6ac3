#pragma once

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace fixtures {

// Unique scratch directory per test, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("quorum_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::string file(const std::string& name) const {
    return (path_ / name).string();
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

// A supplier-payment question and fifteen phrasings of it, used as the
// canonical ingestion example.
inline const std::string kSupplierIntent = "Who are the suppliers that I need to pay?";

inline const std::vector<std::string> kSupplierVariants = {
    "Who are the suppliers that I need to pay?",
    "Can you tell me the suppliers I'm currently indebted to?",
    "Which suppliers have outstanding payments from me?",
    "To which suppliers do I have financial obligations?",
    "I'd like to know the suppliers to whom I owe money.",
    "Could you list the suppliers that are awaiting payment from me?",
    "Who are the vendors expecting payments from me?",
    "What are the names of the suppliers I haven't paid yet?",
    "Can you identify the suppliers with unpaid invoices from me?",
    "To whom do I need to make payments among the suppliers?",
    "Which suppliers should I settle accounts with?",
    "Are there any suppliers I'm yet to pay?",
    "Who are the suppliers with pending payments from my side?",
    "Which suppliers am I in debt to currently?",
    "Could you specify the suppliers that I need to pay?",
};

}  // namespace fixtures
