#pragma once

#include "mimq/errors.hpp"
#include "mimq/gaussian.hpp"

#include <json.hpp>

#include <string>

namespace mimq {

nlohmann::json vector_to_json(const Vector& v);
nlohmann::json matrix_to_json(const Matrix& m);  // row-major nested arrays
Vector vector_from_json(const nlohmann::json& j, const std::string& path);
Matrix matrix_from_json(const nlohmann::json& j, const std::string& path);

// Typed access to a JSON object; failures raise ConfigError naming the key path.
class JsonReader {
 public:
  JsonReader(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "/" : path_, "expected an object");
  }

  std::string path(const std::string& key) const { return path_.empty() ? key : path_ + "/" + key; }
  bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }

  const nlohmann::json& child(const std::string& key) const {
    if (!has(key)) throw ConfigError(path(key), "missing required key");
    return j_.at(key);
  }

  template <typename T>
  T required(const std::string& key) const {
    const auto& v = child(key);
    try {
      return v.get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(path(key), std::string("wrong type: ") + e.what());
    }
  }

  template <typename T>
  T optional(const std::string& key, T fallback) const {
    return has(key) ? required<T>(key) : fallback;
  }

  JsonReader object(const std::string& key) const { return JsonReader(child(key), path(key)); }

 private:
  const nlohmann::json& j_;
  std::string path_;
};

}  // namespace mimq
