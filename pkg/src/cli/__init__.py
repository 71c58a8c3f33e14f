#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
命令行子命令实现
"""

from .commands import cmd_fig, cmd_sweep, cmd_verify, load_sweep_config

__all__ = ['cmd_fig', 'cmd_sweep', 'cmd_verify', 'load_sweep_config']
