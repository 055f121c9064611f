"""
Package UI - Giao diện dòng lệnh
"""
