#include <csignal>
#include <iostream>
#include <pthread.h>
#include <stop_token>
#include <thread>

#include "cli.hpp"

int main(int argc, char** argv) {
  // SIGINT/SIGTERM are consumed by a watcher thread so `receive` can flush
  // pending traces before exiting.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  std::stop_source stop;
  std::thread([&signals, &stop] {
    int received = 0;
    sigwait(&signals, &received);
    stop.request_stop();
  }).detach();

  std::vector<std::string> args(argv + 1, argv + argc);
  return span2records::cli::run(std::move(args), std::cout, std::cerr, stop.get_token());
}
