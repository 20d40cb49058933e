"""
MCP server exposing the Novikov lab as tools
"""
