### Monitor class

import os
import time
import logging
from threading import Thread
import psutil

class Monitor(object):
    """ Class that monitors CPU utilization and resident memory of a process """

    def __init__(self, sampling_rate=None, pid=None):
        self.sampling_rate = sampling_rate if sampling_rate is not None else 0.5
        self.pid = pid if pid is not None else os.getpid()

        self.should_stop = False
        self.thread = None
        self.stats = []
        self.peak_memory = 0

    def _sample(self, process):
        used_cpu = process.cpu_percent() / (psutil.cpu_count() or 1) # CPU utilization in %
        used_cpumem = process.memory_info().rss // (1024*1024) # Memory use in MB
        self.peak_memory = max(self.peak_memory, used_cpumem)
        return (used_cpu, used_cpumem)

    def _monitor(self):
        current_sample = []
        try:
            process = psutil.Process(self.pid)
            while not self.should_stop:
                current_sample.append(self._sample(process))
                time.sleep(self.sampling_rate)
            # one last sample so short intervals are still covered
            current_sample.append(self._sample(process))
        except psutil.Error as e:
            logging.warning("process monitoring stopped: {}".format(e))
        if current_sample:
            self.stats.append([round(sum(x) / len(x)) for x in zip(*current_sample)])

    def start_monitor(self):
        self.should_stop = False
        self.thread = Thread(target=self._monitor, daemon=True)
        self.thread.start()

    def stop_monitor(self):
        self.should_stop = True
        if self.thread is not None:
            self.thread.join()
            self.thread = None

    def get_stats(self):
        """List of [mean cpu %, mean memory MB] pairs, one per monitored interval"""
        return self.stats

    def get_peak_memory(self):
        """Highest resident memory seen, in MB"""
        return self.peak_memory
