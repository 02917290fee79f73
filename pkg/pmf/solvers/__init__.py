# pmf/solvers/__init__.py
"""Fokker-Planck time-update solvers on the moving grid"""
