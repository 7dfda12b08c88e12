#include <CLI11.hpp>

#include <csignal>
#include <iostream>
#include <optional>
#include <string>

#include "vcd/cli.hpp"
#include "vcd/config.hpp"
#include "vcd/service.hpp"

int main(int argc, char** argv) {
  CLI::App app{"vision-correcting display service (HTTP + server-sent events)"};
  std::string host = "127.0.0.1";
  int port = 8080;
  std::optional<std::string> config;
  app.add_option("--host", host, "address to bind");
  app.add_option("--port", port, "port to bind; 0 picks a free one")->check(CLI::Range(0, 65535));
  app.add_option("--config", config, "key=value file pinning defaults");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  // Handle SIGINT/SIGTERM on this thread; every server thread inherits the mask.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  try {
    vcd::Settings settings;
    if (config) vcd::apply_config_file(settings, *config);
    settings.validate();
    vcd::CorrectionServer server(settings);
    const int bound = server.start(host, port);
    std::cout << "listening on http://" << host << ':' << bound << std::endl;
    int received = 0;
    sigwait(&signals, &received);
    server.stop();
  } catch (const vcd::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return vcd::exit_code_for(e.kind());
  }
  return 0;
}
