// Copyright 2026 The Chainplan Authors
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

#include <csignal>
#include <iostream>

#include <CLI11.hpp>
#include <httplib.h>

#include "service.h"

namespace {
httplib::Server* g_server = nullptr;
void Stop(int) {
  if (g_server) g_server->stop();
}
}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"chainplan HTTP server"};
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string products;
  std::string record;
  app.add_option("--host", host, "Listen address");
  app.add_option("--port", port, "Listen port")->check(CLI::Range(1, 65535));
  app.add_option("--products", products, "Product table (JSON)")->check(CLI::ExistingFile);
  app.add_option("--record", record, "Append processed messages to this NDJSON file");
  CLI11_PARSE(app, argc, argv);

  chainplan::service::ServiceOptions options;
  options.record_path = record;
  try {
    if (!products.empty()) options.engine.products = chainplan::ProductTable::Load(products);
  } catch (const std::exception& e) {
    std::cerr << "products: " << e.what() << '\n';
    return 2;
  }
  chainplan::service::Service service(std::move(options));
  httplib::Server server;
  service.Mount(server);
  g_server = &server;
  std::signal(SIGINT, Stop);
  std::signal(SIGTERM, Stop);
  std::cerr << "listening on " << host << ':' << port << '\n';
  if (!server.listen(host, port)) {
    std::cerr << "cannot listen on " << host << ':' << port << '\n';
    return 1;
  }
  return 0;
}
