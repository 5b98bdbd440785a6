# -*- coding: utf-8 -*-
# Copyright (C) 2024 The smtpipe Authors
# SPDX-License-Identifier: Apache-2.0
import logging as log
from threading import Event, Thread

import psutil


def _tree_rss(process):
    total = process.memory_info().rss
    for child in process.children(recursive=True):
        try:
            total += child.memory_info().rss
        except psutil.Error:
            pass
    return total


def kill_process_tree(pid):
    """Kill ``pid`` and its descendants; already finished processes are ignored."""
    try:
        parent = psutil.Process(pid)
    except psutil.NoSuchProcess:
        return
    procs = parent.children(recursive=True) + [parent]
    for proc in procs:
        try:
            proc.kill()
        except psutil.NoSuchProcess:
            pass
    psutil.wait_procs(procs, timeout=5)


class MemConsumption:
    def __init__(self, pid, cap_mb=None, interval=0.05):
        """Watch the resident memory of a solver process tree."""
        self.pid = pid
        self.cap_mb = cap_mb
        self.interval = interval
        self.g_max_rss_mem_consumption = -1
        self.cap_exceeded = False
        self.g_stop_event = Event()
        self.t_mem_thread = None

    def collect_memory_consumption(self):
        """Sample until stopped, the process exits or the cap is hit."""
        try:
            process = psutil.Process(self.pid)
        except psutil.NoSuchProcess:
            return
        while not self.g_stop_event.is_set():
            try:
                rss_mem_data = _tree_rss(process)
            except psutil.Error:
                break
            if rss_mem_data > self.g_max_rss_mem_consumption:
                self.g_max_rss_mem_consumption = rss_mem_data
            if self.cap_mb is not None and rss_mem_data > self.cap_mb * 2**20:
                log.warning(f'[solver] memory cap of {self.cap_mb} MiB exceeded, killing pid {self.pid}')
                self.cap_exceeded = True
                kill_process_tree(self.pid)
                break
            self.g_stop_event.wait(self.interval)

    def start_collect_mem_consumption_thread(self):
        self.t_mem_thread = Thread(target=self.collect_memory_consumption, daemon=True)
        self.t_mem_thread.start()

    def end_collect_mem_consumption_thread(self):
        self.g_stop_event.set()
        if self.t_mem_thread is not None:
            self.t_mem_thread.join()

    def get_max_memory_consumption(self):
        """Peak resident memory in MiB, -1 when nothing was sampled."""
        if self.g_max_rss_mem_consumption < 0:
            return -1
        return self.g_max_rss_mem_consumption / float(2**20)
