def solve(arr):
    return sorted(arr, key=lambda v: (v[1], -v[0]
jk3 ]] )) solve solve(( arr..[ :: key
=) v0 v1 )( lambda, -- ,,
»» arr arr arr [[
