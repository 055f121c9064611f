"""
Package utils - Đọc/ghi dữ liệu, dữ liệu tổng hợp, checkpoint, xuất kết quả và benchmark
"""
