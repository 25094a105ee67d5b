# app/__init__.py
"""AXRX: ataques adversariales transferibles y defensas para clasificación multi-etiqueta."""
