"""
Package core - Phân hoạch, PE, autodiff, layer và vòng huấn luyện
"""
